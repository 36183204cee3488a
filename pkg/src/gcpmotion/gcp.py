"""Geometric counting process (GCP).

A GCP with intensity ``lam`` is a mixed Poisson process whose random rate is
exponentially distributed with mean ``lam``.  Conditionally on the rate the
intertimes are i.i.d. exponential; unconditionally they are dependent and
heavy tailed (infinite mean).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .streams import as_generator


@dataclass(frozen=True)
class GcpParams:
    """Intensity of one geometric counting process (units: 1/time)."""

    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not np.isfinite(lam) or lam <= 0:
            raise DomainError(f"GCP intensity must be positive and finite, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)


@dataclass
class IntertimeSequence:
    """Consecutive intertimes D_1, D_2, ... of one GCP."""

    durations: np.ndarray
    rate: float | None = None  # mixing rate used to generate the sequence
    cumulative: np.ndarray = field(init=False)

    def __post_init__(self):
        self.durations = np.asarray(self.durations, dtype=float)
        self.cumulative = np.cumsum(self.durations)

    def __len__(self):
        return len(self.durations)

    def arrival(self, k: int) -> float:
        """T_k, the k-th arrival time (T_0 = 0)."""
        return 0.0 if k == 0 else float(self.cumulative[k - 1])


def _time(t, name="t"):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError(f"{name} must be finite")
    if np.any(t < 0):
        raise DomainError(f"{name} must be non-negative")
    return t


def _order(k, minimum):
    k = np.asarray(k)
    if not np.issubdtype(k.dtype, np.integer):
        if np.any(k != np.floor(k)):
            raise DomainError("k must be an integer")
        k = k.astype(np.int64)
    if np.any(k < minimum):
        raise DomainError(f"k must be >= {minimum}")
    return k


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def count_pmf(params: GcpParams, t, k):
    """P{N(t) = k} = (1/(1+lam t)) (lam t/(1+lam t))^k."""
    t = _time(t)
    k = _order(k, 0)
    a = params.lam * t
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = k * np.log(a) - (k + 1) * np.log1p(a)
        p = np.where(a == 0, (k == 0).astype(float), np.exp(logp))
    return _out(p)


def intertime_pdf(params: GcpParams, t):
    """Marginal density lam/(1+lam t)^2 shared by every intertime."""
    t = _time(t)
    lam = params.lam
    return _out(lam / (1.0 + lam * t) ** 2)


def intertime_survival(params: GcpParams, t):
    """P{D > t} = 1/(1+lam t)."""
    t = _time(t)
    return _out(1.0 / (1.0 + params.lam * t))


def intertime_cdf(params: GcpParams, t):
    t = _time(t)
    a = params.lam * t
    return _out(a / (1.0 + a))


def conditional_survival(params: GcpParams, k, t, s):
    """P{D_k > s | T_{k-1} = t} = ((1+lam t)/(1+lam (t+s)))^k, k >= 1."""
    k = _order(k, 1)
    t = _time(t)
    s = _time(s, "s")
    lam = params.lam
    return _out(((1.0 + lam * t) / (1.0 + lam * (t + s))) ** k)


def conditional_pdf(params: GcpParams, k, t, s):
    """Density in s of D_k given T_{k-1} = t."""
    k = _order(k, 1)
    t = _time(t)
    s = _time(s, "s")
    lam = params.lam
    return _out(k * lam * (1.0 + lam * t) ** k / (1.0 + lam * (t + s)) ** (k + 1))


def arrival_pdf(params: GcpParams, k, t):
    """Density of the k-th arrival time T_k (k >= 1).

    f(t) = k lam (lam t)^(k-1) / (1+lam t)^(k+1)
    """
    k = _order(k, 1)
    t = _time(t)
    lam = params.lam
    a = lam * t
    with np.errstate(divide="ignore", invalid="ignore"):
        logf = np.log(k * lam) + (k - 1) * np.log(a) - (k + 1) * np.log1p(a)
    f = np.where((a == 0) & (k == 1), lam, np.exp(logf))
    return _out(f)


def sample_mixing_rate(params: GcpParams, rng, size=None):
    """Draw the random Poisson rate, exponential with mean ``lam``."""
    return as_generator(rng).exponential(params.lam, size=size)


def sample_intertimes(params: GcpParams, horizon: float, rng) -> IntertimeSequence:
    """Draw intertimes until their cumulative sum exceeds ``horizon``.

    The last duration always ends past the horizon.  The rate is drawn once
    and the durations are exponential given that rate, which reproduces the
    marginal and conditional intertime laws of the GCP jointly.
    """
    horizon = float(horizon)
    if not np.isfinite(horizon) or horizon <= 0:
        raise DomainError("horizon must be positive and finite")
    gen = as_generator(rng)
    rate = gen.exponential(params.lam)
    durations = []
    total = 0.0
    # batches keep the Python loop short when the drawn rate is large
    batch = max(4, int(rate * horizon * 1.25) + 4)
    while total <= horizon:
        d = gen.exponential(1.0, size=batch) / rate
        c = total + np.cumsum(d)
        stop = np.searchsorted(c, horizon, side="right")
        if stop < batch:
            durations.extend(d[: stop + 1])
            total = c[stop]
        else:
            durations.extend(d)
            total = c[-1]
    return IntertimeSequence(np.array(durations), rate=rate)
