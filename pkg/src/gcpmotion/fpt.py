"""Upward first passage of X_1(t) through a barrier beta > 0."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .law import MotionParams
from .sim import SamplePath
from .streams import direction_streams

FPT_COLUMNS = ("hit_time", "n_switches_at_hit", "is_atom")


@dataclass(frozen=True)
class FptSpec:
    beta: float
    mp: MotionParams

    def __post_init__(self):
        beta = float(self.beta)
        if not np.isfinite(beta) or beta <= 0:
            raise DomainError("barrier beta must be positive")
        object.__setattr__(self, "beta", beta)

    @property
    def speeds(self) -> np.ndarray:
        """x1-projections of the four velocities, c v_j . e1."""
        return self.mp.c * self.mp.ctx.vectors[:, 0]

    @property
    def straight_time(self) -> float:
        """Time for a straight run along v1 to reach the barrier (inf if v1 does not climb)."""
        s = self.speeds[0]
        return self.beta / s if s > 0 else np.inf


def atom_probability(spec: FptSpec) -> float:
    """P{D_11 > beta / (c v_1x)} = 1 / (1 + lambda_1 beta / (c v_1x))."""
    s = spec.straight_time
    if not np.isfinite(s):
        return 0.0
    return float(1.0 / (1.0 + spec.mp.lambdas[0] * s))


@dataclass
class FptEstimate:
    beta: float
    horizon: float
    n: int
    atom_prob: float
    hitting_times: np.ndarray  # hits only, in path order
    n_switches: np.ndarray
    is_atom: np.ndarray
    censored_count: int

    @property
    def atom_count(self) -> int:
        return int(self.is_atom.sum())

    @property
    def atom_frequency(self) -> float:
        return self.atom_count / self.n

    @property
    def atom_sigma(self) -> float:
        p = self.atom_prob
        return float(np.sqrt(p * (1 - p) / self.n))

    @property
    def censored_fraction(self) -> float:
        return self.censored_count / self.n

    def continuous_times(self) -> np.ndarray:
        return self.hitting_times[~self.is_atom]

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FPT_COLUMNS)
        for h, k, a in zip(self.hitting_times, self.n_switches, self.is_atom):
            w.writerow((format(float(h), ".17g"), int(k), int(a)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    def summary(self) -> dict:
        cont = self.continuous_times()
        return {
            "beta": self.beta,
            "horizon": self.horizon,
            "n": self.n,
            "atom_probability": self.atom_prob,
            "atom_count": self.atom_count,
            "atom_frequency": self.atom_frequency,
            "atom_sigma": self.atom_sigma,
            "atom_z": (self.atom_frequency - self.atom_prob) / self.atom_sigma if self.atom_sigma > 0 else 0.0,
            "hit_count": int(self.hitting_times.size),
            "continuous_hit_count": int(cont.size),
            "censored_count": self.censored_count,
            "censored_fraction": self.censored_fraction,
            "min_hit_time": float(self.hitting_times.min()) if self.hitting_times.size else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def first_passage(path: SamplePath, spec: FptSpec):
    """(hit time, switches before the hit) for one path, or None if no hit
    by the path horizon.  Each linear piece is solved exactly."""
    speeds = spec.speeds
    x1 = 0.0
    k = 0
    for start, end, j in path.segments():
        s = speeds[j]
        stop = min(end, path.horizon)
        if s > 0 and x1 + s * (stop - start) >= spec.beta:
            return start + (spec.beta - x1) / s, k
        if end > path.horizon:
            return None
        x1 += s * (end - start)
        k += 1


def _fpt_block(spec: FptSpec, horizon: float, size: int, seed: int, block: int):
    mp = spec.mp
    speeds = spec.speeds
    gens = direction_streams(seed, block)
    alpha = np.stack([g.exponential(lam, size) for g, lam in zip(gens, mp.lambdas)])
    x1 = np.zeros(size)
    clock = np.zeros(size)
    hit = np.full(size, np.nan)
    switches = np.full(size, -1, dtype=np.int64)
    active = np.arange(size)
    m = 0
    while active.size:
        j = m % 4
        d = gens[j].exponential(1.0, active.size) / alpha[j, active]
        start = clock[active]
        stop = np.minimum(start + d, horizon)
        s = speeds[j]
        if s > 0:
            crossed = x1[active] + s * (stop - start) >= spec.beta
            idx = active[crossed]
            hit[idx] = clock[idx] + (spec.beta - x1[idx]) / s
            switches[idx] = m
        else:
            crossed = np.zeros(active.size, dtype=bool)
        alive = ~crossed & (start + d <= horizon)
        go = active[alive]
        x1[go] += s * d[alive]
        clock[go] += d[alive]
        active = go
        m += 1
    return hit, switches


def estimate_fpt(spec: FptSpec, horizon: float, n: int, seed: int, block_size: int = 1 << 16) -> FptEstimate:
    """Monte Carlo first-passage times; paths not hitting by ``horizon`` are
    counted as censored.  Streams are those of ``sim.run_ensemble``."""
    horizon = float(horizon)
    if not np.isfinite(horizon) or horizon <= _min_time(spec):
        raise ConfigError(f"horizon must exceed the minimal passage time {_min_time(spec):.17g}")
    if n < 1:
        raise ConfigError("n must be at least 1")
    sizes = [block_size] * (n // block_size)
    if n % block_size:
        sizes.append(n % block_size)
    hits, sw = [], []
    for b, size in enumerate(sizes):
        h, k = _fpt_block(spec, horizon, size, seed, b)
        hits.append(h)
        sw.append(k)
    hit = np.concatenate(hits)
    switches = np.concatenate(sw)
    ok = np.isfinite(hit)
    return FptEstimate(
        beta=spec.beta,
        horizon=horizon,
        n=int(n),
        atom_prob=atom_probability(spec),
        hitting_times=hit[ok],
        n_switches=switches[ok],
        is_atom=switches[ok] == 0,
        censored_count=int((~ok).sum()),
    )


def _min_time(spec: FptSpec) -> float:
    """beta over the fastest upward x1-speed: no path can hit earlier."""
    top = spec.speeds.max()
    return spec.beta / top if top > 0 else np.inf
