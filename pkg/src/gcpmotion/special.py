"""Real dilogarithm Li2(z) for z <= 1."""

from __future__ import annotations

import numpy as np

from .errors import DomainError

PI2_6 = np.pi**2 / 6

_N_TERMS = 60  # |w| <= 1/2 -> truncation error below 2^-60 / 60^2


def _series(w):
    # sum_{k>=1} w^k / k^2, Horner from the tail
    acc = np.zeros_like(w)
    for k in range(_N_TERMS, 0, -1):
        acc = w * (1.0 / k**2 + acc)
    return acc


def dilog(z):
    """Li2(z) = -int_0^z log(1-u)/u du on the real branch z <= 1.

    The argument is brought into |w| <= 1/2 with the reflection
    Li2(z) = pi^2/6 - log z log(1-z) - Li2(1-z), the inversion
    Li2(z) = -pi^2/6 - log^2(-z)/2 - Li2(1/z) and the Landen identity
    Li2(z) = -Li2(z/(z-1)) - log^2(1-z)/2; the power series takes over from
    there.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z > 1) or np.any(np.isnan(z)):
        raise DomainError("dilog is only real for z <= 1")
    out = np.empty_like(z)
    flat = z.reshape(-1)
    res = out.reshape(-1)

    one = flat == 1.0
    res[one] = PI2_6

    small = np.abs(flat) <= 0.5
    res[small] = _series(flat[small])

    hi = (flat > 0.5) & ~one
    if np.any(hi):
        w = flat[hi]
        res[hi] = PI2_6 - np.log(w) * np.log1p(-w) - _series(1.0 - w)

    mid = (flat < -0.5) & (flat >= -2.0)
    if np.any(mid):
        w = flat[mid]
        # Landen: z/(z-1) in [1/3, 2/3]; values above 1/2 go through reflection
        u = w / (w - 1.0)
        lu = np.where(u <= 0.5, _series(np.minimum(u, 0.5)), 0.0)
        up = u > 0.5
        if np.any(up):
            uu = u[up]
            lu[up] = PI2_6 - np.log(uu) * np.log1p(-uu) - _series(1.0 - uu)
        res[mid] = -lu - 0.5 * np.log1p(-w) ** 2

    far = flat < -2.0
    if np.any(far):
        w = flat[far]
        inv = 1.0 / w  # in (-1/2, 0)
        res[far] = -PI2_6 - 0.5 * np.log(-w) ** 2 - _series(inv)

    return float(out) if out.ndim == 0 else out
