"""Exact simulation of sample paths and Monte Carlo ensembles.

Direction j's sojourn times are the intertimes of its own GCP; the four
sequences are independent and are interleaved cyclically
D_{1,1}, D_{2,1}, D_{3,1}, D_{4,1}, D_{1,2}, ...
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gcp
from .errors import ConfigError, DomainError
from .geometry import support
from .law import MotionParams
from .streams import as_generator, direction_streams

COMPONENTS = ("vertex", "edge", "face", "interior")

# cumulative-count offsets: T_{4n+j} = sum_r D_r^{(n + M[j-1, r-1])}
CYCLE_OFFSETS = np.tril(np.ones((4, 4), dtype=int))


def component_of(switches):
    """0 -> vertex, 1 -> edge, 2 -> face, >= 3 -> interior."""
    return COMPONENTS[min(int(switches), 3)]


@dataclass(frozen=True)
class PathEvent:
    k: int  # switch number, T_k
    time: float
    direction_index: int  # 1..4, active from this switch on


@dataclass
class SamplePath:
    horizon: float
    durations: list  # four arrays D_{j,1}, D_{j,2}, ...
    events: list = field(default_factory=list)

    @property
    def switch_times(self) -> np.ndarray:
        return np.array([e.time for e in self.events])

    def segments(self):
        """(start, end, direction index 0..3) of each sojourn, the last one
        ending at its full duration (past the horizon)."""
        start = 0.0
        m = 0
        out = []
        while True:
            j = m % 4
            d = self.durations[j][m // 4]
            out.append((start, start + d, j))
            if start + d > self.horizon:
                return out
            start += d
            m += 1


def _direction_rngs(rng):
    if isinstance(rng, (int, np.integer)):
        return direction_streams(int(rng))
    gen = as_generator(rng)
    return gen.spawn(4)


def simulate_path(mp: MotionParams, t: float, rng) -> SamplePath:
    """One realisation up to time ``t`` starting along v1 from the origin.

    Each direction draws its own intertime sequence until that sequence
    alone exceeds ``t``, which is always enough for the interleaved path.
    """
    if not np.isfinite(t) or t <= 0:
        raise DomainError("t must be positive")
    rngs = _direction_rngs(rng)
    seqs = [gcp.sample_intertimes(g, t, r) for g, r in zip(mp.gcps, rngs)]
    durations = [s.durations for s in seqs]
    events = []
    clock = 0.0
    m = 0
    while True:
        d = durations[m % 4][m // 4]
        if clock + d > t:
            break
        clock += d
        m += 1
        events.append(PathEvent(m, clock, (m % 4) + 1))
    return SamplePath(float(t), durations, events)


def arrival_time(path: SamplePath, k: int) -> float:
    """T_k rebuilt from per-direction cumulative sums (cycle bookkeeping)."""
    if k == 0:
        return 0.0
    n, j = divmod(k - 1, 4)
    total = 0.0
    for r in range(4):
        count = n + CYCLE_OFFSETS[j, r]
        total += float(np.sum(path.durations[r][:count]))
    return total


@dataclass
class PositionSample:
    x: np.ndarray
    switches: int
    direction: int  # 1..4, current direction at t
    occupation: np.ndarray  # time spent along each direction in [0, t]

    @property
    def component(self) -> str:
        return component_of(self.switches)


def position_at(path: SamplePath, mp: MotionParams, t: float) -> PositionSample:
    """Position at time ``t`` (with right-continuous velocity)."""
    if t > path.horizon:
        raise DomainError(f"path only reaches t = {path.horizon}, asked for {t}")
    if t <= 0:
        raise DomainError("t must be positive")
    occ = np.zeros(4)
    switches = 0
    for start, end, j in path.segments():
        if end <= t:
            occ[j] += end - start
            switches += 1
            continue
        occ[j] += t - start
        direction = j + 1
        break
    x = mp.c * occ @ mp.ctx.vectors
    return PositionSample(x, switches, direction, occ)


@dataclass(frozen=True)
class HistogramSpec:
    """Regular grid for the interior histogram; bounds default to the
    bounding box of T(t)."""

    bins: tuple = (12, 12, 12)
    lower: tuple | None = None
    upper: tuple | None = None

    def __post_init__(self):
        bins = tuple(int(b) for b in self.bins)
        if len(bins) != 3 or min(bins) < 1:
            raise ConfigError("histogram needs three positive bin counts")
        object.__setattr__(self, "bins", bins)

    def edges(self, mp: MotionParams, t: float):
        lo, hi = support(mp.ds, t).bounding_box()
        span = hi - lo
        pad = 1e-12 * max(span.max(), 1.0)
        if self.lower is None:
            lower, upper = lo - pad, hi + pad
        else:
            lower, upper = np.asarray(self.lower, float), np.asarray(self.upper, float)
            if np.any(lower > lo + pad) or np.any(upper < hi - pad):
                raise ConfigError("histogram grid does not cover the support")
        return [np.linspace(lower[d], upper[d], self.bins[d] + 1) for d in range(3)]


@dataclass
class EnsembleResult:
    t: float
    n: int
    seed: int
    component_counts: dict
    switch_counts: np.ndarray  # switch_counts[k] = #paths with N(t) = k
    direction_counts: np.ndarray  # current direction at t
    position_sum: np.ndarray
    position_sq_sum: np.ndarray
    histogram: np.ndarray | None = None
    edges: list | None = None

    def frequencies(self) -> dict:
        return {k: v / self.n for k, v in self.component_counts.items()}

    @property
    def interior_count(self) -> int:
        return self.component_counts["interior"]

    def cell_probabilities(self):
        return None if self.histogram is None else self.histogram / self.n

    def cell_standard_errors(self):
        if self.histogram is None:
            return None
        p = self.histogram / self.n
        return np.sqrt(p * (1 - p) / self.n)

    def mean_position(self):
        return self.position_sum / self.n

    def summary(self) -> dict:
        mean = self.mean_position()
        var = self.position_sq_sum / self.n - mean**2
        return {
            "t": self.t,
            "n": self.n,
            "seed": self.seed,
            "component_counts": dict(self.component_counts),
            "component_frequencies": self.frequencies(),
            "switch_counts": [int(v) for v in self.switch_counts],
            "direction_counts": [int(v) for v in self.direction_counts],
            "mean_position": [float(v) for v in mean],
            "position_variance": [float(v) for v in var],
            "histogram_bins": None if self.histogram is None else list(self.histogram.shape),
        }


def simulate_block(mp: MotionParams, t: float, size: int, seed: int, block: int = 0):
    """Positions, switch counts and current directions of ``size`` paths.

    All paths advance one sojourn per iteration, so at iteration m every
    active path moves along direction m mod 4 and direction streams stay
    separate: stream (seed, block, j) feeds direction j only.
    """
    gens = direction_streams(seed, block)
    alpha = np.stack([g.exponential(lam, size) for g, lam in zip(gens, mp.lambdas)])
    cv = mp.c * mp.ctx.vectors
    x = np.zeros((size, 3))
    clock = np.zeros(size)
    switches = np.zeros(size, dtype=np.int64)
    direction = np.zeros(size, dtype=np.int64)
    active = np.arange(size)
    m = 0
    while active.size:
        j = m % 4
        d = gens[j].exponential(1.0, active.size) / alpha[j, active]
        end = clock[active] + d
        done = end > t
        fin = active[done]
        x[fin] += (t - clock[fin])[:, None] * cv[j]
        switches[fin] = m
        direction[fin] = j
        go = active[~done]
        x[go] += d[~done][:, None] * cv[j]
        clock[go] = end[~done]
        active = go
        m += 1
    return x, switches, direction


def _block_summary(args):
    mp, t, size, seed, block, edges = args
    x, switches, direction = simulate_block(mp, t, size, seed, block)
    comp = np.minimum(switches, 3)
    hist = None
    if edges is not None:
        inside = comp == 3
        hist, _ = np.histogramdd(x[inside], bins=edges)
        hist = hist.astype(np.int64)
    return (
        np.bincount(comp, minlength=4),
        np.bincount(switches),
        np.bincount(direction, minlength=4),
        x.sum(axis=0),
        (x**2).sum(axis=0),
        hist,
    )


def run_ensemble(
    mp: MotionParams,
    t: float,
    n: int,
    seed: int,
    grid: HistogramSpec | None = None,
    block_size: int = 1 << 16,
    workers: int = 1,
) -> EnsembleResult:
    """Simulate ``n`` independent paths and accumulate component counts and,
    when ``grid`` is given, a histogram of interior positions.

    Block b draws from streams keyed by (seed, b, j), so the result depends
    only on (seed, n, block_size), not on ``workers``.
    """
    if n < 1:
        raise ConfigError("n must be at least 1")
    if not np.isfinite(t) or t <= 0:
        raise ConfigError("t must be positive")
    edges = grid.edges(mp, t) if grid is not None else None
    sizes = [block_size] * (n // block_size)
    if n % block_size:
        sizes.append(n % block_size)
    tasks = [(mp, t, size, seed, b, edges) for b, size in enumerate(sizes)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_summary, tasks))
    else:
        parts = [_block_summary(task) for task in tasks]

    comp = np.zeros(4, dtype=np.int64)
    direction = np.zeros(4, dtype=np.int64)
    switch_counts = np.zeros(1, dtype=np.int64)
    psum = np.zeros(3)
    psq = np.zeros(3)
    hist = None
    for c, s, d, xs, xq, h in parts:
        comp += c
        direction += d
        if len(s) > len(switch_counts):
            switch_counts = np.pad(switch_counts, (0, len(s) - len(switch_counts)))
        switch_counts[: len(s)] += s
        psum += xs
        psq += xq
        if h is not None:
            hist = h.copy() if hist is None else hist + h
    return EnsembleResult(
        t=float(t),
        n=int(n),
        seed=int(seed),
        component_counts={name: int(v) for name, v in zip(COMPONENTS, comp)},
        switch_counts=switch_counts,
        direction_counts=direction,
        position_sum=psum,
        position_sq_sum=psq,
        histogram=hist,
        edges=edges,
    )
