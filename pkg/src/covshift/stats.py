"""Batch, windowed, and per-split statistics built on the weight algebra.

The core quantity is a weighted double sum of squared centered inner products
(x_i - mean)'(x_j - mean): with the summed weight matrix it measures overall
covariance instability (mean zero under a stable stream), and with a single
split's weights it profiles where a change happened.  The sliding-window form
keeps the pairwise products cached so each new observation costs O(H * p).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DataError
from .weights import WeightPlan, profile_weight_matrix

__all__ = [
    "statistic_batch",
    "profile_statistic",
    "WindowState",
    "statistic_windowed",
]


def _as_matrix(obs, name: str = "observations") -> np.ndarray:
    x = np.asarray(obs, dtype=float)
    if x.ndim != 2:
        raise DataError(f"{name} must be a 2-D array (time x dim), got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{name} contain non-finite values")
    return x


def _check_mean(mean, p: int) -> np.ndarray:
    mu = np.asarray(mean, dtype=float)
    if mu.shape != (p,):
        raise DataError(f"mean has shape {mu.shape}, expected ({p},)")
    return mu


def _statistic_from_gram(gram: np.ndarray, plan: WeightPlan) -> float:
    n = plan.length
    return float((plan.weights * gram**2).sum() / n**2)


def statistic_batch(obs, mean, plan: WeightPlan) -> float:
    """Weighted double sum over all pairs, normalized by length^2.

    Pass a zero mean for the uncentered form.  Zero exactly for constant
    input (the weights sum to zero) and scales as c^4 under obs -> c*obs.
    """
    x = _as_matrix(obs)
    n, p = x.shape
    if plan.length != n:
        raise ConfigurationError(f"plan built for length {plan.length}, got {n} observations")
    xc = x - _check_mean(mean, p)
    return _statistic_from_gram(xc @ xc.T, plan)


def profile_statistic(obs, mean, dep_order: int, t: int) -> float:
    """Single-split statistic: the batch form with the split-t weights.

    t is the (1-based) length of the first segment; valid splits are
    dep_order+2 <= t <= n-dep_order-2.  Under a change the expected profile
    peaks at the true split.
    """
    x = _as_matrix(obs)
    n, p = x.shape
    a = profile_weight_matrix(t, n, dep_order)
    xc = x - _check_mean(mean, p)
    gram = xc @ xc.T
    return float((a * gram**2).sum() / n**2)


class WindowState:
    """Ring buffer of centered observations with cached squared products.

    Single-writer: one stream owner pushes; the cached gram_sq row/column for
    the evicted slot is overwritten in place, everything else is untouched.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigurationError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.count = 0
        self._start = 0  # ring position of the oldest observation once full
        self._dim: int | None = None
        self._buf: np.ndarray | None = None        # capacity x p, centered
        self.gram_sq: np.ndarray | None = None     # capacity x capacity

    def push(self, x, mean) -> "WindowState":
        """Center x, store it (evicting the oldest when full), cache products."""
        xv = np.asarray(x, dtype=float)
        if xv.ndim != 1:
            raise DataError(f"observation must be 1-D, got shape {xv.shape}")
        if not np.all(np.isfinite(xv)):
            raise DataError("observation contains non-finite values")
        if self._dim is None:
            self._dim = xv.shape[0]
            self._buf = np.zeros((self.capacity, self._dim))
            self.gram_sq = np.zeros((self.capacity, self.capacity))
        elif xv.shape[0] != self._dim:
            raise DataError(f"observation has dimension {xv.shape[0]}, expected {self._dim}")
        xc = xv - _check_mean(mean, self._dim)

        if self.count < self.capacity:
            pos = self.count
        else:
            pos = self._start
            self._start = (self._start + 1) % self.capacity
        self._buf[pos] = xc
        filled = min(self.count + 1, self.capacity)
        # one new row/column of inner products, squared
        prods = self._buf[:filled] @ xc
        self.gram_sq[pos, :filled] = prods**2
        self.gram_sq[:filled, pos] = self.gram_sq[pos, :filled]
        self.count += 1
        return self

    def _order(self) -> np.ndarray:
        """Ring positions in chronological order, oldest first."""
        filled = min(self.count, self.capacity)
        if self.count <= self.capacity:
            return np.arange(filled)
        return (self._start + np.arange(self.capacity)) % self.capacity

    def contents(self) -> np.ndarray:
        """Centered window contents in chronological order (copy)."""
        if self._buf is None:
            return np.zeros((0, 0))
        return self._buf[self._order()].copy()

    @property
    def full(self) -> bool:
        return self.count >= self.capacity


def statistic_windowed(state: WindowState, plan: WeightPlan) -> float | None:
    """Windowed statistic over the current contents; None until full.

    Window positions are renumbered 1..H oldest -> newest so one plan built
    for length H serves every evaluation.
    """
    if plan.length != state.capacity:
        raise ConfigurationError(
            f"plan built for length {plan.length}, window capacity {state.capacity}"
        )
    if not state.full:
        return None
    order = state._order()
    g = state.gram_sq[np.ix_(order, order)]
    h = state.capacity
    return float((plan.weights * g).sum() / h**2)
