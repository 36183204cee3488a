"""Reproducible random streams.

Every stream is a Philox (counter-based) generator keyed by a user seed and a
tuple of integers, so a given task always sees the same numbers regardless of
how work is scheduled across processes.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for ``(seed, *key)``."""
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def direction_streams(seed: int, *key: int) -> list[np.random.Generator]:
    """Four independent generators, one per direction, keyed ``(seed, *key, j)``."""
    return [stream(seed, *key, j) for j in range(4)]


def as_generator(rng) -> np.random.Generator:
    """Coerce an int seed, a SeedSequence or a Generator into a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(rng))
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.Generator(np.random.Philox(rng))
    raise TypeError(f"cannot build a random generator from {type(rng).__name__}")
