"""Shared generators for tests."""

import numpy as np

from gcpmotion.geometry import DirectionSet


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_direction_set(rng, c=1.0, min_weight=0.05):
    """A valid set: v1..v3 well spread, v4 = -(b . v) with positive b."""
    while True:
        v = unit(rng.normal(size=(3, 3)))
        if abs(np.linalg.det(v)) < 0.2:
            continue
        b = rng.dirichlet(np.ones(3))
        if b.min() < min_weight:
            continue
        v4 = unit(-(b @ v))
        return DirectionSet.from_vectors(np.vstack([v, v4]), c=c)


def random_interior_points(mp, t, n, rng, margin=0.0):
    """Uniform points of T(t) whose time fractions all exceed ``margin``."""
    out = []
    while len(out) < n:
        w = rng.dirichlet(np.ones(4))
        if w.min() <= margin:
            continue
        out.append(mp.c * t * w @ mp.ctx.vectors)
    return np.array(out)
