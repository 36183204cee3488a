"""Analytic versus Monte Carlo comparison of the law of X(t)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import support
from .law import MotionParams, density, singular_masses
from .quadrature import integrate_polytope
from .sim import COMPONENTS, EnsembleResult

CELL_COLUMNS = ("i", "j", "k", "x1", "x2", "x3", "analytic", "empirical", "sigma", "z")
COMPONENT_COLUMNS = ("component", "analytic", "empirical", "count", "sigma", "z")


@dataclass
class CellComparison:
    index: np.ndarray  # (m, 3) cell indices
    centroid: np.ndarray  # (m, 3)
    analytic: np.ndarray
    empirical: np.ndarray
    sigma: np.ndarray
    z: np.ndarray

    def fraction_within(self, k: float = 3.0) -> float:
        return float(np.mean(np.abs(self.z) <= k))

    def rows(self):
        for idx, cen, a, e, s, z in zip(self.index, self.centroid, self.analytic, self.empirical, self.sigma, self.z):
            yield (*map(int, idx), *map(float, cen), float(a), float(e), float(s), float(z))


def interior_cells(mp: MotionParams, t: float, edges, margin: float = 1e-9):
    """Indices and centroids of cells whose centroid lies strictly inside T(t)."""
    tet = support(mp.ds, t)
    mids = [0.5 * (e[1:] + e[:-1]) for e in edges]
    grid = np.stack(np.meshgrid(*mids, indexing="ij"), axis=-1).reshape(-1, 3)
    idx = np.stack(np.meshgrid(*[np.arange(len(m)) for m in mids], indexing="ij"), axis=-1).reshape(-1, 3)
    keep = np.all(tet.residuals(grid) > margin * mp.c * t, axis=1)
    return idx[keep], grid[keep]


def cell_integral(mp: MotionParams, t: float, lower, upper, interior_point, order: int = 6) -> float:
    """int of p1 over the box [lower, upper] intersected with T(t)."""
    tet = support(mp.ds, t)
    # residual n.x - c t q >= 0  ->  -n.x + c t q <= 0
    faces = np.column_stack([-tet.planes[:, :3], mp.c * t * tet.planes[:, 3]])
    eye = np.eye(3)
    box = np.vstack([np.column_stack([eye, -np.asarray(upper)]), np.column_stack([-eye, np.asarray(lower)])])
    return integrate_polytope(lambda x: density(mp, x, t), np.vstack([faces, box]), interior_point, order)


def compare_histogram(mp: MotionParams, result: EnsembleResult, order: int = 6) -> CellComparison:
    if result.histogram is None:
        raise ValueError("ensemble has no histogram")
    t, n, edges = result.t, result.n, result.edges
    idx, cen = interior_cells(mp, t, edges)
    analytic = np.empty(len(idx))
    for m, (i, j, k) in enumerate(idx):
        lo = np.array([edges[0][i], edges[1][j], edges[2][k]])
        hi = np.array([edges[0][i + 1], edges[1][j + 1], edges[2][k + 1]])
        analytic[m] = cell_integral(mp, t, lo, hi, cen[m], order)
    empirical = result.histogram[idx[:, 0], idx[:, 1], idx[:, 2]] / n
    sigma = np.sqrt(analytic * (1 - analytic) / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, (empirical - analytic) / sigma, 0.0)
    return CellComparison(idx, cen, analytic, empirical, sigma, z)


def compare_components(mp: MotionParams, result: EnsembleResult) -> list:
    """Rows (component, analytic, empirical, count, sigma, z) with binomial sigma."""
    masses = singular_masses(mp, result.t)
    expected = (masses.eta1, masses.eta2, masses.eta3, masses.interior_mass)
    n = result.n
    rows = []
    for name, p in zip(COMPONENTS, expected):
        count = result.component_counts[name]
        sigma = np.sqrt(p * (1 - p) / n)
        freq = count / n
        rows.append((name, float(p), freq, count, float(sigma), float((freq - p) / sigma) if sigma > 0 else 0.0))
    return rows
