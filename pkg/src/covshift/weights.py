"""Weight algebra for the covariance-change statistics.

A sequence of length n is compared around every admissible split point t by a
three-branch weight A_t(i, j): pairs on the same side of the split get a
positive weight, pairs straddling it a negative one, with denominators chosen
so each banded t-slice sums to zero exactly.  Summing the slices over
t = M+2 ... n-M-2 and zeroing the band |i-j| <= M gives the weight matrix W
used by the batch and windowed statistics; a single split's banded slice is
the profile weight used for change-point localization.

M is the dependence order of the stream: observations more than M steps apart
are assumed independent, and the band removes the pairs whose products carry
that dependence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError


def _check_order(length: int, dep_order: int) -> None:
    if dep_order < 0:
        raise ConfigurationError(f"dep_order must be >= 0, got {dep_order}")
    min_len = 2 * dep_order + 5
    if length < min_len:
        raise ConfigurationError(
            f"length {length} too small for dep_order {dep_order}; "
            f"need at least {min_len}"
        )


def profile_weight(t: int, i: int, j: int, length: int, dep_order: int) -> float:
    """Split weight A_t(i, j) for a sequence of the given length.

    All indices are 1-based.  Valid splits are dep_order+2 <= t <=
    length-dep_order-2; the weight is symmetric in (i, j).
    """
    n, m = length, dep_order
    _check_order(n, m)
    if not (m + 2 <= t <= n - m - 2):
        raise ConfigurationError(
            f"split t={t} outside valid range [{m + 2}, {n - m - 2}] "
            f"for length {n}, dep_order {m}"
        )
    if not (1 <= i <= n and 1 <= j <= n):
        raise ConfigurationError(f"indices ({i}, {j}) outside 1..{n}")
    val = 0.0
    if i <= t and j <= t:
        val += (n - t - m) / (t - m - 1)
    if i >= t + 1 and j >= t + 1:
        val += (t - m) / (n - t - m - 1)
    if (i <= t < j) or (j <= t < i):
        val -= (t - m) * (n - t - m) / (t * (n - t) - m * (m + 1) / 2.0)
    return val


def profile_weight_matrix(t: int, length: int, dep_order: int) -> np.ndarray:
    """Banded slice A_t(i, j) * 1{|i-j| >= dep_order+1} as an n x n matrix."""
    n, m = length, dep_order
    _check_order(n, m)
    if not (m + 2 <= t <= n - m - 2):
        raise ConfigurationError(
            f"split t={t} outside valid range [{m + 2}, {n - m - 2}] "
            f"for length {n}, dep_order {m}"
        )
    idx = np.arange(1, n + 1)
    left = idx <= t
    alpha = (n - t - m) / (t - m - 1)
    beta = (t - m) / (n - t - m - 1)
    gamma = (t - m) * (n - t - m) / (t * (n - t) - m * (m + 1) / 2.0)
    a = np.where(left, alpha, 0.0)[:, None] * left[None, :] \
        + np.where(~left, beta, 0.0)[:, None] * (~left)[None, :] \
        - gamma * (left[:, None] ^ left[None, :])
    band = np.abs(idx[:, None] - idx[None, :]) >= m + 1
    return np.where(band, a, 0.0)


@dataclass(frozen=True, eq=False)
class WeightPlan:
    """Immutable weight matrix for a fixed (length, dep_order).

    weights is read-only and shareable across threads; per-split profile
    matrices can always be materialized on demand (profile_weights_available).
    """

    length: int
    dep_order: int
    weights: np.ndarray = field(repr=False)
    profile_weights_available: bool = True

    def __post_init__(self):
        self.weights.setflags(write=False)


@lru_cache(maxsize=64)
def build_weight_plan(length: int, dep_order: int) -> WeightPlan:
    """Sum the banded split weights over all valid splits.

    Vectorized with prefix sums over t, O(n^2): the same-side branches
    telescope over t >= max(i,j) and t < min(i,j), the straddling branch over
    the range in between.
    """
    n, m = length, dep_order
    _check_order(n, m)
    t = np.arange(m + 2, n - m - 1, dtype=float)  # m+2 .. n-m-2 inclusive
    alpha = (n - t - m) / (t - m - 1)
    beta = (t - m) / (n - t - m - 1)
    gamma = (t - m) * (n - t - m) / (t * (n - t) - m * (m + 1) / 2.0)
    t0, t1 = m + 2, n - m - 2
    cum_a = np.concatenate(([0.0], np.cumsum(alpha)))
    cum_b = np.concatenate(([0.0], np.cumsum(beta)))
    cum_g = np.concatenate(([0.0], np.cumsum(gamma)))

    idx = np.arange(1, n + 1)
    mn = np.minimum.outer(idx, idx)
    mx = np.maximum.outer(idx, idx)

    # sum of alpha over t in [max(i,j), t1]
    lo = np.clip(mx, t0, t1 + 1)
    same_high = cum_a[-1] - cum_a[lo - t0]
    # sum of beta over t in [t0, min(i,j)-1]
    hi = np.clip(mn - 1, t0 - 1, t1)
    same_low = cum_b[hi - t0 + 1]
    # sum of gamma over t in [min(i,j), max(i,j)-1]
    g_lo = np.clip(mn, t0, t1 + 1)
    g_hi = np.clip(mx - 1, t0 - 1, t1)
    straddle = np.where(g_hi >= g_lo, cum_g[g_hi - t0 + 1] - cum_g[np.minimum(g_lo, t1 + 1) - t0], 0.0)

    w = same_high + same_low - straddle
    band = (mx - mn) >= m + 1
    w = np.where(band, w, 0.0)
    return WeightPlan(length=n, dep_order=m, weights=w)


@lru_cache(maxsize=64)
def lag_weight_sums(plan: WeightPlan) -> dict[tuple[int, int], float]:
    """S(h1, h2) = sum_{i,j} W(i,j) * W(i-h1, j+h2) for |h1|,|h2| <= dep_order.

    Out-of-range shifted indices contribute zero.  These sums pair with the
    squared trace estimates in the null-variance formula.
    """
    w = plan.weights
    n = plan.length
    m = plan.dep_order
    sums: dict[tuple[int, int], float] = {}
    for h1 in range(-m, m + 1):
        for h2 in range(-m, m + 1):
            i0, i1 = max(0, h1), min(n, n + h1)
            j0, j1 = max(0, -h2), min(n, n - h2)
            if i0 >= i1 or j0 >= j1:
                sums[(h1, h2)] = 0.0
                continue
            a = w[i0:i1, j0:j1]
            b = w[i0 - h1:i1 - h1, j0 + h2:j1 + h2]
            sums[(h1, h2)] = float((a * b).sum())
    return sums
