"""Probability law of the position when the motion starts along v1.

At time t the law splits into a point mass at the vertex A1(t) (no switch),
a mass on the edge A1A2 (one switch), a mass on the face A1A2A3 (two
switches) and an absolutely continuous part on the interior of T(t) (three
or more switches).  The density is resolved by the current direction j into
sub-densities p_1j whose sum is p_1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np
from scipy import integrate

from . import gcp
from .errors import DomainError, NumericalError
from .gcp import GcpParams
from .geometry import (
    DirectionSet,
    GeometryContext,
    residence_times,
    validate_directions,
    velocity_matrix,
)
from .quadrature import adaptive_tetra, barycentric_subdivision
from .special import PI2_6, dilog

NEAR_SINGULAR = 1e-8
K_MAX = 200


@dataclass(frozen=True)
class MotionParams:
    ds: DirectionSet
    lambdas: tuple

    def __post_init__(self):
        lambdas = tuple(float(v) for v in self.lambdas)
        if len(lambdas) != 4:
            raise DomainError("four intensities are required")
        for lam in lambdas:
            GcpParams(lam)
        report = validate_directions(self.ds)
        if not report:
            raise DomainError(f"invalid direction set: {report.reason}")
        object.__setattr__(self, "lambdas", lambdas)

    @classmethod
    def regular(cls, lambdas=(1.0, 1.0, 1.0, 1.0), c: float = 1.0) -> "MotionParams":
        return cls(DirectionSet.regular(c), tuple(lambdas))

    @cached_property
    def ctx(self) -> GeometryContext:
        return velocity_matrix(self.ds)

    @property
    def gcps(self) -> tuple:
        return tuple(GcpParams(lam) for lam in self.lambdas)

    @property
    def c(self) -> float:
        return self.ds.c


@dataclass(frozen=True)
class SingularMasses:
    t: float
    eta1: float
    eta2: float
    eta3: float

    @property
    def interior_mass(self) -> float:
        return 1.0 - self.eta1 - self.eta2 - self.eta3

    def as_dict(self) -> dict:
        return {
            "t": self.t,
            "eta1": self.eta1,
            "eta2": self.eta2,
            "eta3": self.eta3,
            "interior": self.interior_mass,
        }


@dataclass
class LawEvaluation:
    """Sub-densities p_1j (shape (..., 4)) and their sum at one or more points."""

    p: np.ndarray
    near_singular: np.ndarray | bool = False

    @property
    def total(self):
        s = np.sum(self.p, axis=-1)
        return float(s) if np.ndim(s) == 0 else s


# --- singular components -------------------------------------------------


def _t(t):
    t = float(t)
    if not np.isfinite(t) or t < 0:
        raise DomainError("t must be finite and non-negative")
    return t


def vertex_mass(mp: MotionParams, t) -> float:
    """P{no switch by t} = 1/(1 + lambda_1 t)."""
    return 1.0 / (1.0 + mp.lambdas[0] * _t(t))


def edge_mass(mp: MotionParams, t) -> float:
    """P{D11 < t <= D11 + D21}, closed form in (lambda_1, lambda_2)."""
    t = _t(t)
    l1, l2 = mp.lambdas[:2]
    if t == 0:
        return 0.0
    s = l1 + l2 + l1 * l2 * t
    return float(l1 / s**2 * (l1 * t * s / (1 + l1 * t) + l2 * (np.log1p(l1 * t) + np.log1p(l2 * t))))


def edge_mass_quad(mp: MotionParams, t) -> float:
    """Quadrature of int_0^t f_D11(s) P{D21 > t - s} ds."""
    t = _t(t)
    if t == 0:
        return 0.0
    g1, g2 = mp.gcps[:2]
    val, err = integrate.quad(
        lambda s: gcp.intertime_pdf(g1, s) * gcp.intertime_survival(g2, t - s),
        0.0,
        t,
        epsabs=1e-14,
        epsrel=1e-13,
        limit=200,
    )
    return float(val)


def face_mass_closed(lam: float, t) -> float:
    """P{D11 + D21 < t <= D11 + D21 + D31} for three equal intensities.

    Depends on lam and t through a = lam t only.
    """
    a = lam * _t(t)
    if a == 0:
        return 0.0
    K = 3.0 + a
    l1 = np.log1p(a)
    l2 = np.log(2.0 + a)
    rational = 2.0 * (
        -l1 / (2 + a)
        + (1 + a) * l1 / ((2 + a) * K**2)
        + a / (K * (2 + a))
        + (a + 5) / K**2 * np.log1p(a / 2)
    )
    j3 = -l1 / (2 * (2 + a) ** 2) + 0.5 * (l1 - np.log1p(a / 2) - a / (2 * (2 + a)))
    j2 = -l1 / (2 + a) + np.log((1 + a) / (2 + a)) + np.log(2.0)
    j1 = l1 * l2 + dilog(-(1.0 + a)) + PI2_6 / 2
    j0 = l1 * l2 + dilog(1.0 / (2 + a)) - dilog((1 + a) / (2 + a))
    return float(rational + 4.0 * (j3 / K + j2 / K**2 + (j1 + j0) / K**3))


def face_mass_quad(mp: MotionParams, t, tol: float = 1e-12) -> float:
    """2D quadrature of P{D11 + D21 < t <= D11 + D21 + D31}."""
    t = _t(t)
    if t == 0:
        return 0.0
    l1, l2, l3 = mp.lambdas[:3]

    # plain float arithmetic: this runs once per quadrature node
    def f(v, u):
        return l1 / (1 + l1 * u) ** 2 * l2 / (1 + l2 * v) ** 2 / (1 + l3 * max(t - u - v, 0.0))

    val, err = integrate.dblquad(f, 0.0, t, 0.0, lambda u: t - u, epsabs=tol, epsrel=tol)
    if not np.isfinite(val) or err > max(100 * tol, 1e-9):
        raise NumericalError(f"face-mass quadrature did not converge (error {err:.2e})", achieved=err)
    return val


def face_mass(mp: MotionParams, t) -> float:
    l1, l2, l3 = mp.lambdas[:3]
    if l1 == l2 == l3:
        return face_mass_closed(l1, t)
    return face_mass_quad(mp, t)


def singular_masses(mp: MotionParams, t) -> SingularMasses:
    t = _t(t)
    return SingularMasses(t, vertex_mass(mp, t), edge_mass(mp, t), face_mass(mp, t))


# --- absolutely continuous component -------------------------------------


def _interior_taus(mp: MotionParams, x, t):
    t = float(t)
    if not np.isfinite(t) or t <= 0:
        raise DomainError("t must be positive")
    tau = residence_times(mp.ctx, x, t)
    return tau


def _require_interior(tau, t):
    tol = 1e-9 * t
    if np.any(tau <= tol):
        bad = np.min(tau, axis=-1)
        kind = "exterior" if np.any(bad < -tol) else "boundary"
        raise DomainError(f"point is not interior to the support ({kind})")


def _symmetric(a):
    """Elementary symmetric sums (A, B, C, D) of a[..., 0:4]."""
    A = a.sum(axis=-1)
    B = sum(a[..., i] * a[..., j] for i, j in combinations(range(4), 2))
    C = sum(a[..., i] * a[..., j] * a[..., k] for i, j, k in combinations(range(4), 3))
    D = a.prod(axis=-1)
    return A, B, C, D


def sub_densities_from_times(lambdas, tau, det_abs: float) -> np.ndarray:
    """Closed-form p_1j as a function of the residence times; shape (..., 4)."""
    lam = np.asarray(lambdas, dtype=float)
    a = lam * tau
    A, B, C, D = _symmetric(a)
    S = 1.0 + A + B + C
    r = D / S
    l1, l2, l3, l4 = lam
    t1, t2, t3, t4 = (tau[..., i] for i in range(4))
    a2, a3, a4 = a[..., 1], a[..., 2], a[..., 3]
    scale = det_abs * S**2
    # every p_1j carries the factor 1/S^2 after pulling S^2 out of the numerator
    base = (1.0 + 6.0 * r * (1.0 + r)) / scale
    p11 = l1 * l2 * l3 * l4 * t1 * base
    p12 = 2 * l1**2 * l2 * l3 * l4 * t1 * t2 * (1 + a2) * (1 + a3) * (1 + a4) * (1 + 3 * r) / (scale * S)
    p13 = 2 * l1**2 * l2**2 * l3 * l4 * t1 * t2 * t3 * (1 + a3) * (1 + a4) * (2 + 3 * r) / (scale * S)
    p14 = l1 * l2 * l3 * (1 + a4) * base
    return np.stack([p11, p12, p13, p14], axis=-1)


def interior_density_closed(mp: MotionParams, x, t) -> LawEvaluation:
    """Closed-form sub-densities at interior points (vectorised over x)."""
    tau = _interior_taus(mp, x, t)
    _require_interior(tau, t)
    p = sub_densities_from_times(mp.lambdas, tau, abs(mp.ctx.detA))
    near = np.min(tau, axis=-1) < NEAR_SINGULAR * t
    return LawEvaluation(p, near if np.ndim(near) else bool(near))


def density(mp: MotionParams, x, t):
    """p_1(x, t) at interior points."""
    return interior_density_closed(mp, x, t).total


def interior_density_general(mp: MotionParams, x, t, tol: float = 1e-9) -> LawEvaluation:
    """Sub-densities from the series over completed cycles.

    The k-th term of p_1j multiplies the arrival-time densities of the
    directions other than j (k+1 arrivals before j, k after) with
    P{direction j has exactly k completed sojourns within tau_j}, the latter
    written as an integral over the last switch time s into direction j and
    evaluated by adaptive quadrature.  Only a single point is accepted.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise DomainError("interior_density_general evaluates one point at a time")
    if tol <= 0:
        raise DomainError("tol must be positive")
    t = float(t)
    tau = _interior_taus(mp, x, t)
    _require_interior(tau, t)
    gs = mp.gcps
    det_abs = abs(mp.ctx.detA)
    p = np.zeros(4)
    for j in range(4):
        total = 0.0
        small = 0
        for k in range(K_MAX + 1):
            term = _series_term(gs, tau, t, j, k, tol)
            total += term
            if k >= 3 and abs(term) <= tol * abs(total):
                small += 1
                if small == 3:
                    break
            else:
                small = 0
        else:
            raise NumericalError(
                f"series for p_1{j + 1} did not settle within {K_MAX} terms", achieved=abs(term)
            )
        p[j] = total / det_abs
    near = bool(np.min(tau) < NEAR_SINGULAR * t)
    return LawEvaluation(p, near)


def _arrival_density(g: GcpParams, n: int, x: float) -> float:
    # n = 0 is a point mass at zero, which has no density at interior points
    if n == 0:
        return 0.0
    return gcp.arrival_pdf(g, n, x)


def _series_term(gs, tau, t, j, k, tol):
    prod = 1.0
    for i in range(4):
        if i == j:
            continue
        n = k + 1 if i < j else k
        prod *= _arrival_density(gs[i], n, tau[i])
        if prod == 0.0:
            return 0.0
    g = gs[j]
    tj = tau[j]
    if k == 0:
        inner = gcp.conditional_survival(g, 1, 0.0, tj)
    else:
        start = t - tj

        def integrand(s):
            u = s - start
            return gcp.arrival_pdf(g, k, u) * gcp.conditional_survival(g, k + 1, u, t - s)

        inner, _ = integrate.quad(integrand, start, t, epsabs=tol / 10 * prod if prod else 0, epsrel=tol / 10, limit=200)
    return prod * inner


# --- limits ---------------------------------------------------------------


def limiting_density(ctx: GeometryContext, x, t):
    """Limit of p_1 when all intensities grow at equal rates.

    xi(x, t) = 6 t (tau1 tau2 tau3 tau4)^2 / (|det A| e3(tau)^4) with e3 the
    third elementary symmetric sum of the residence times.  It is the density
    of positions whose time fractions are proportional to 1/alpha_j for
    i.i.d. exponential rates alpha_j.
    """
    t = float(t)
    if not np.isfinite(t) or t <= 0:
        raise DomainError("t must be positive")
    tau = residence_times(ctx, x, t)
    _require_interior(tau, t)
    return _limiting_from_times(tau, t, abs(ctx.detA))


def _limiting_from_times(tau, t, det_abs):
    _, _, e3, e4 = _symmetric(tau)
    val = 6.0 * t * e4**2 / (det_abs * e3**4)
    return float(val) if np.ndim(val) == 0 else val


@dataclass
class DecayReport:
    t: np.ndarray
    scaled: np.ndarray  # p_1(x, t) t^3
    ratios: np.ndarray  # scaled[i+1] / scaled[i]
    bounded: bool
    passed: bool


def decay_check(mp: MotionParams, x, t_grid, ratio_tol: float = 0.05) -> DecayReport:
    """Track p_1(x, t) t^3 along an increasing time grid.

    Passes when the scaled values stay bounded, the distance of the
    successive ratios from 1 does not grow, and the last ratio is within
    ``ratio_tol`` of 1.
    """
    ts = np.asarray(t_grid, dtype=float)
    if ts.ndim != 1 or len(ts) < 2 or np.any(np.diff(ts) <= 0):
        raise DomainError("t_grid must be an increasing sequence of at least two times")
    scaled = np.array([density(mp, x, t) * t**3 for t in ts])
    ratios = scaled[1:] / scaled[:-1]
    bounded = bool(np.all(np.isfinite(scaled)) and np.max(scaled) < 1e3 * max(np.max(scaled[:1]), 1e-300))
    dev = np.abs(ratios - 1.0)
    settling = bool(np.all(np.diff(dev) <= 1e-12)) if len(dev) > 1 else True
    passed = bounded and settling and bool(dev[-1] <= ratio_tol)
    return DecayReport(ts, scaled, ratios, bounded, passed)


def interior_integral(mp: MotionParams, t, which: str = "density", tol: float = 1e-6, order: int = 8):
    """Integral of p_1 (``which="density"``) or xi (``"limiting"``) over the
    interior of T(t).

    Adaptive collapsed cubature on the 24 barycentric pieces, so every vertex
    of T(t) is a collapse point of the rule.  Returns ``(value, error)``.
    """
    t = _t(t)
    if t == 0:
        raise DomainError("t must be positive")
    det_abs = abs(mp.ctx.detA)
    if which == "density":
        def f(x):
            return sub_densities_from_times(mp.lambdas, residence_times(mp.ctx, x, t), det_abs).sum(axis=-1)
    elif which == "limiting":
        def f(x):
            return _limiting_from_times(residence_times(mp.ctx, x, t), t, det_abs)
    else:
        raise DomainError(f"unknown integrand {which!r}")
    pieces = barycentric_subdivision(mp.ctx.support(t).vertices)
    total = err = 0.0
    for P in pieces:
        v, e = adaptive_tetra(f, P, tol=tol / len(pieces), order=order)
        total += v
        err += e
    return total, err


# --- grids ---------------------------------------------------------------


def evaluate_points(mp: MotionParams, points, t):
    """Rows (x1, x2, x3, t, p11, p12, p13, p14, p1, xi) for the interior
    points among ``points``; other points are dropped."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    tau = _interior_taus(mp, pts, t)
    keep = np.all(tau > 1e-9 * t, axis=-1)
    pts, tau = pts[keep], tau[keep]
    det_abs = abs(mp.ctx.detA)
    p = sub_densities_from_times(mp.lambdas, tau, det_abs)
    xi = _limiting_from_times(tau, t, det_abs)
    n = len(pts)
    return np.column_stack([pts, np.full(n, float(t)), p, p.sum(axis=1), np.atleast_1d(xi)])


GRID_COLUMNS = ("x1", "x2", "x3", "t", "p11", "p12", "p13", "p14", "p1", "xi")
