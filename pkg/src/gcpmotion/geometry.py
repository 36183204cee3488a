"""Direction vectors, the support tetrahedron and the residence-time map.

Conventions: ``theta`` is the azimuth in the xy-plane, ``phi`` the polar angle
from +z, and a unit direction is (cos th sin ph, sin th sin ph, cos ph).
Directions and faces are numbered 1..4 in the public API.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DegenerateGeometryError, DomainError

FACES = tuple(combinations((1, 2, 3, 4), 3))

BOUNDARY_EPS = 1e-9
DET_EPS = 1e-12
BARY_EPS = 1e-10

INTERIOR, FACE, EDGE, VERTEX, EXTERIOR = "interior", "face", "edge", "vertex", "exterior"
_KIND_BY_ZEROS = {0: INTERIOR, 1: FACE, 2: EDGE, 3: VERTEX}


@dataclass(frozen=True)
class DirectionSet:
    """Four spherical directions and the common speed ``c``."""

    theta: tuple
    phi: tuple
    c: float = 1.0

    def __post_init__(self):
        theta = tuple(float(v) for v in self.theta)
        phi = tuple(float(v) for v in self.phi)
        if len(theta) != 4 or len(phi) != 4:
            raise DomainError("exactly four directions are required")
        tol = 1e-12
        if any(not (-tol <= a <= 2 * np.pi + tol) for a in theta):
            raise DomainError("theta angles must lie in [0, 2 pi]")
        if any(not (-tol <= a <= np.pi + tol) for a in phi):
            raise DomainError("phi angles must lie in [0, pi]")
        c = float(self.c)
        if not np.isfinite(c) or c <= 0:
            raise DomainError("speed c must be positive")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "c", c)

    @classmethod
    def regular(cls, c: float = 1.0) -> "DirectionSet":
        """The regular tetrahedron with v1 = (1,0,0) and v2 in the xy-plane."""
        th2 = np.pi - np.arctan(2 * np.sqrt(2))
        th34 = np.pi + np.arctan(np.sqrt(2))
        ph3 = np.arccos(np.sqrt(2 / 3))
        return cls(
            theta=(0.0, th2, th34, th34),
            phi=(np.pi / 2, np.pi / 2, ph3, np.pi - ph3),
            c=c,
        )

    @classmethod
    def from_vectors(cls, vectors, c: float = 1.0) -> "DirectionSet":
        v = np.asarray(vectors, dtype=float)
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
        phi = np.arccos(np.clip(v[:, 2], -1.0, 1.0))
        theta = np.mod(np.arctan2(v[:, 1], v[:, 0]), 2 * np.pi)
        return cls(theta=tuple(theta), phi=tuple(phi), c=c)

    def is_regular(self, tol: float = 1e-9) -> bool:
        return bool(np.allclose(directions(self), directions(DirectionSet.regular()), atol=tol))


def directions(ds: DirectionSet) -> np.ndarray:
    """Unit direction vectors as rows of a (4, 3) array."""
    th = np.asarray(ds.theta)
    ph = np.asarray(ds.phi)
    return np.stack([np.cos(th) * np.sin(ph), np.sin(th) * np.sin(ph), np.cos(ph)], axis=1)


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    rank: int
    barycentric: tuple | None
    reason: str = ""

    def __bool__(self):
        return self.valid


def validate_directions(ds: DirectionSet) -> ValidityReport:
    """Check that the cyclic motion can reach a full-dimensional region.

    (i) v1, v2, v3 must be linearly independent, and (ii) v4 must point into
    the cone spanned by -v1, -v2, -v3, i.e. v4 = -(b1 v1 + b2 v2 + b3 v3) with
    b >= 0.  The reported barycentric coordinates are b / sum(b), the
    position of the ray through v4 on the triangle (-v1, -v2, -v3).
    """
    v = directions(ds)
    base = v[:3].T
    rank = int(np.linalg.matrix_rank(base, tol=1e-10))
    if rank < 3:
        return ValidityReport(False, rank, None, "v1, v2, v3 are linearly dependent")
    b = np.linalg.solve(-base, v[3])
    total = b.sum()
    if total <= BARY_EPS:
        return ValidityReport(False, rank, None, "v4 does not lie in the cone of -v1, -v2, -v3")
    bary = b / total
    if np.any(bary < -BARY_EPS) or np.any(bary > 1 + BARY_EPS):
        return ValidityReport(False, rank, tuple(bary), "v4 does not lie in the cone of -v1, -v2, -v3")
    return ValidityReport(True, rank, tuple(bary))


def _check_face(i, j, k):
    if not (1 <= i < j < k <= 4):
        raise DomainError(f"face indices must satisfy 1 <= i < j < k <= 4, got {(i, j, k)}")


def face_plane_coeffs(ds: DirectionSet, i: int, j: int, k: int):
    """(a, b, c, q) such that a x1 + b x2 + c x3 - c_speed t q = 0 on face ijk.

    The normal is (A_j - A_i) x (A_k - A_i) written in unit directions, so
    the same coefficients describe the face at every t.
    """
    _check_face(i, j, k)
    v = directions(ds)
    (xi, yi, zi), (xj, yj, zj), (xk, yk, zk) = v[i - 1], v[j - 1], v[k - 1]
    a = (yj - yi) * (zk - zi) - (yk - yi) * (zj - zi)
    b = (xk - xi) * (zj - zi) - (xj - xi) * (zk - zi)
    c = xi * (yj - yk) + xj * (yk - yi) + xk * (yi - yj)
    q = a * xi + b * yi + c * zi
    return float(a), float(b), float(c), float(q)


def _oriented_planes(ds: DirectionSet) -> np.ndarray:
    """Face planes as rows (n1, n2, n3, q) with |n| = 1, signed so that the
    opposite vertex has a positive residual n.x - c t q."""
    v = directions(ds)
    rows = []
    for face in FACES:
        a, b, c, q = face_plane_coeffs(ds, *face)
        (opp,) = set(range(1, 5)) - set(face)
        row = np.array([a, b, c, q])
        norm = np.linalg.norm(row[:3])
        if norm == 0:
            raise DegenerateGeometryError(f"face {face} is degenerate")
        row = row / norm
        if row[:3] @ v[opp - 1] - row[3] < 0:
            row = -row
        rows.append(row)
    return np.array(rows)


@dataclass(frozen=True)
class Membership:
    kind: str
    faces: tuple = ()  # faces (i, j, k) the point lies on
    vertex: int | None = None


@dataclass
class Tetrahedron:
    """The support T(t) at a fixed time."""

    ds: DirectionSet
    t: float
    vertices: np.ndarray = field(init=False)
    planes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.vertices = self.ds.c * self.t * directions(self.ds)
        self.planes = _oriented_planes(self.ds)

    @property
    def volume(self) -> float:
        """Euclidean volume from the vertices (scalar triple product / 6)."""
        e = self.vertices[1:] - self.vertices[0]
        return abs(float(np.linalg.det(e))) / 6.0

    @property
    def parallelepiped_volume(self) -> float:
        """|det(A2-A1, A3-A1, A4-A1)|, equal to |det A| t^3."""
        return 6.0 * self.volume

    def residuals(self, x) -> np.ndarray:
        """Signed distances to the four faces, positive inside; shape (..., 4)."""
        x = np.asarray(x, dtype=float)
        return x @ self.planes[:, :3].T - self.ds.c * self.t * self.planes[:, 3]

    def codes(self, x, eps: float = BOUNDARY_EPS) -> np.ndarray:
        """Vectorised classification: -1 exterior, 0 interior, 1 face, 2 edge, 3 vertex."""
        r = self.residuals(x)
        tol = eps * self.ds.c * self.t
        zero = np.abs(r) <= tol
        out = zero.sum(axis=-1)
        return np.where(np.any(r < -tol, axis=-1), -1, out)

    def classify(self, x, eps: float = BOUNDARY_EPS) -> Membership:
        r = self.residuals(x)
        tol = eps * self.ds.c * self.t
        if np.any(r < -tol):
            return Membership(EXTERIOR)
        on = tuple(FACES[m] for m in np.flatnonzero(np.abs(r) <= tol))
        kind = _KIND_BY_ZEROS[len(on)]
        vertex = None
        if kind == VERTEX:
            (vertex,) = set.intersection(*(set(f) for f in on))
        return Membership(kind, on, vertex)

    def contains(self, x, eps: float = BOUNDARY_EPS):
        """True for points in the closed tetrahedron (within tolerance)."""
        return self.codes(x, eps) >= 0

    def interior(self, x, eps: float = BOUNDARY_EPS):
        return self.codes(x, eps) == 0

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def support(ds: DirectionSet, t: float) -> Tetrahedron:
    if not np.isfinite(t) or t <= 0:
        raise DomainError("t must be positive")
    return Tetrahedron(ds, float(t))


def regular_support_inequalities(x, c: float, t: float):
    """Explicit inequalities describing the open regular tetrahedron."""
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    ct = c * t
    return (
        (-ct / 3 < x1)
        & (x1 < ct)
        & (-(ct - x1) / (2 * np.sqrt(2)) < x2)
        & (x2 < (ct - x1) / np.sqrt(2))
        & (np.abs(x3) < np.sqrt(6) / 6 * (ct - x1 - np.sqrt(2) * x2))
    )


def det_closed_form(ds: DirectionSet) -> float:
    """det A expanded in the spherical angles."""
    th = np.asarray(ds.theta)
    s = np.sin(np.asarray(ds.phi))
    co = np.cos(np.asarray(ds.phi))
    total = 0.0
    for i, j, k, l in ((0, 1, 2, 3), (0, 2, 3, 1), (0, 3, 1, 2), (1, 2, 0, 3), (1, 3, 2, 0), (2, 3, 0, 1)):
        total += s[i] * s[j] * np.sin(th[j] - th[i]) * (co[k] - co[l])
    return ds.c**3 * total


def _tau_coefficients(v: np.ndarray) -> np.ndarray:
    """Rows (L_j, M_j, N_j, P_j), signed so that

    tau_j = c^2/det A * (L_j x1 + M_j x2 + N_j x3 - c t P_j).

    The sums run cyclically over the three directions following j.
    """
    X, Y, Z = v[:, 0], v[:, 1], v[:, 2]
    rows = []
    for j in range(4):
        others = [(j + i) % 4 for i in (1, 2, 3)]
        L = M = N = P = 0.0
        for i in range(3):
            a, b, c = others[i], others[(i + 1) % 3], others[(i + 2) % 3]
            L += Y[a] * (Z[b] - Z[c])
            M += X[a] * (Z[c] - Z[b])
            N += X[a] * (Y[b] - Y[c])
            P += X[a] * (Y[b] * Z[c] - Y[c] * Z[b])
        # cofactor sign (-1)^(j+1) for 1-based j
        sign = 1.0 if j % 2 == 0 else -1.0
        rows.append(sign * np.array([L, M, N, P]))
    return np.array(rows)


@dataclass(frozen=True)
class GeometryContext:
    """Velocity matrix and derived coefficients for a valid direction set."""

    ds: DirectionSet
    A: np.ndarray
    detA: float
    detA_closed: float
    face_coeffs: dict
    tau_coeffs: np.ndarray

    @property
    def c(self) -> float:
        return self.ds.c

    @property
    def vectors(self) -> np.ndarray:
        return directions(self.ds)

    def support(self, t: float) -> Tetrahedron:
        return support(self.ds, t)


def velocity_matrix(ds: DirectionSet) -> GeometryContext:
    v = directions(ds)
    A = np.vstack([ds.c * v.T, np.ones(4)])
    det = float(np.linalg.det(A))
    closed = float(det_closed_form(ds))
    if abs(det) < DET_EPS * ds.c**3:
        raise DegenerateGeometryError(f"|det A| = {abs(det):.3e} is below the degeneracy threshold")
    faces = {f: face_plane_coeffs(ds, *f) for f in FACES}
    return GeometryContext(ds, A, det, closed, faces, _tau_coefficients(v))


def residence_times(ctx: GeometryContext, x, t):
    """Occupation times (tau_1..tau_4) putting the particle at x at time t.

    Vectorised over leading axes of ``x``; returns shape (..., 4).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("t must be positive")
    x = np.asarray(x, dtype=float)
    c = ctx.c
    K = ctx.tau_coeffs
    lin = x @ K[:, :3].T - c * t[..., None] * K[:, 3]
    return c**2 / ctx.detA * lin


def residence_times_solve(ctx: GeometryContext, x, t) -> np.ndarray:
    """Same map by solving A tau = (x, t) directly."""
    x = np.asarray(x, dtype=float)
    tt = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
    rhs = np.concatenate([x, tt[..., None]], axis=-1)
    flat = rhs.reshape(-1, 4)
    return np.linalg.solve(ctx.A, flat.T).T.reshape(rhs.shape)


def regular_residence_times(x, t, c: float = 1.0) -> np.ndarray:
    """Closed form of the residence times for the regular tetrahedron."""
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    ct = c * np.asarray(t, dtype=float)
    r2, r6 = np.sqrt(2.0), np.sqrt(6.0)
    return np.stack(
        [
            ct + 3 * x1,
            ct - x1 + 2 * r2 * x2,
            ct - x1 - r2 * x2 + r6 * x3,
            ct - x1 - r2 * x2 - r6 * x3,
        ],
        axis=-1,
    ) / (4 * c)


def position_from_times(ctx: GeometryContext, tau) -> np.ndarray:
    """Forward map: occupation times -> position c * sum_j tau_j v_j."""
    tau = np.asarray(tau, dtype=float)
    return ctx.c * tau @ ctx.vectors
