"""Cubature over tetrahedra and convex polytopes, and half-line quadrature.

The tetrahedral rule is a collapsed (Duffy) tensor Gauss-Legendre product
rule.  The first vertex is the collapse point, so an integrand singular like
r^-2 at that vertex becomes bounded after the change of variables.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.spatial import ConvexHull, HalfspaceIntersection

from .errors import NumericalError


@lru_cache(maxsize=None)
def _cube_rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    u, v, s = np.meshgrid(x, x, x, indexing="ij")
    wu, wv, ws = np.meshgrid(w, w, w, indexing="ij")
    u, v, s = u.ravel(), v.ravel(), s.ravel()
    # barycentric weights of the collapsed map
    b1 = u * (1 - v)
    b2 = u * v * (1 - s)
    b3 = u * v * s
    b0 = 1 - u
    bary = np.stack([b0, b1, b2, b3], axis=1)
    weight = (wu * wv * ws).ravel() * u**2 * v
    return bary, weight


def tetra_rule(vertices, order: int):
    """Nodes (n, 3) and weights (n,) integrating over one tetrahedron."""
    P = np.asarray(vertices, dtype=float)
    bary, weight = _cube_rule(order)
    vol6 = abs(np.linalg.det(P[1:] - P[0]))
    return bary @ P, weight * vol6


def integrate_tetra(f, vertices, order: int = 12) -> float:
    nodes, w = tetra_rule(vertices, order)
    return float(np.dot(w, f(nodes)))


def _split8(P):
    """Midpoint refinement; corner children keep their original vertex first."""
    m = {(i, j): 0.5 * (P[i] + P[j]) for i in range(4) for j in range(i + 1, 4)}

    def e(i, j):
        return m[(min(i, j), max(i, j))]

    corners = [np.array([P[i]] + [e(i, j) for j in range(4) if j != i]) for i in range(4)]
    # octahedron between the corners, cut along the 02-13 diagonal
    a, b = e(0, 2), e(1, 3)
    ring = [e(0, 1), e(1, 2), e(2, 3), e(0, 3)]
    octa = [np.array([a, b, ring[k], ring[(k + 1) % 4]]) for k in range(4)]
    return corners, octa


def adaptive_tetra(f, vertices, tol: float = 1e-8, order: int = 8, max_depth: int = 6):
    """Adaptive cubature: compare orders ``order`` and ``order + 4`` and
    bisect the tetrahedron into eight children where they disagree.

    Returns ``(value, error_estimate)``.  Pieces at ``max_depth`` are kept
    as they are; NumericalError is raised if the summed error estimate
    exceeds ``tol``.
    """
    stack = [(np.asarray(vertices, dtype=float), 0, tol)]
    total = 0.0
    err = 0.0
    while stack:
        P, depth, local_tol = stack.pop()
        lo = integrate_tetra(f, P, order)
        hi = integrate_tetra(f, P, order + 4)
        e = abs(hi - lo)
        if e <= local_tol or depth >= max_depth:
            total += hi
            err += e
            continue
        corners, octa = _split8(P)
        for child in corners + octa:
            stack.append((child, depth + 1, local_tol / 8))
    if err > tol:
        raise NumericalError(f"tetrahedral cubature did not converge (error {err:.2e})", achieved=err)
    return total, err


def barycentric_subdivision(vertices):
    """Split a tetrahedron into its 24 barycentric pieces.

    Each piece has exactly one original vertex, listed first so that it is
    the collapse point of the rule.
    """
    P = np.asarray(vertices, dtype=float)
    g = P.mean(axis=0)
    out = []
    for face in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        fc = P[list(face)].mean(axis=0)
        for a, b in ((face[0], face[1]), (face[1], face[2]), (face[0], face[2])):
            m = 0.5 * (P[a] + P[b])
            out.append(np.array([P[a], m, fc, g]))
            out.append(np.array([P[b], m, fc, g]))
    return out


def polytope_tetras(halfspaces, interior_point):
    """Tetrahedralise {x : A x + b <= 0} given a strictly interior point.

    ``halfspaces`` rows are (A | b) as in scipy's HalfspaceIntersection.
    """
    hs = HalfspaceIntersection(np.asarray(halfspaces, dtype=float), np.asarray(interior_point, dtype=float))
    pts = hs.intersections
    hull = ConvexHull(pts)
    centre = pts[hull.vertices].mean(axis=0)
    return [np.array([centre, *pts[simplex]]) for simplex in hull.simplices]


def integrate_polytope(f, halfspaces, interior_point, order: int = 8) -> float:
    total = 0.0
    for tet in polytope_tetras(halfspaces, interior_point):
        total += integrate_tetra(f, tet, order)
    return total


def halfline_quad(f, scale: float, epsabs: float = 1e-13, epsrel: float = 1e-12) -> float:
    """int_0^inf f(t) dt via u = scale t/(1 + scale t), which maps the heavy
    tail onto a finite interval."""

    def g(u):
        t = u / (scale * (1.0 - u))
        return f(t) / (scale * (1.0 - u) ** 2)

    val, _ = integrate.quad(g, 0.0, 1.0, epsabs=epsabs, epsrel=epsrel, limit=200)
    return val
