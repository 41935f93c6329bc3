"""Online monitoring: feed observations one at a time, alarm on a threshold.

A Detector is built from a TrainingSummary (mean, dependence order, null
standard deviation) and a DetectorConfig (window size, alarm threshold).  Each
incoming observation updates a rolling window; once the window is full the
standardized windowed statistic is compared against the threshold.  After an
alarm, `localize` scans the recorded stream for the most likely change point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DataError, DetectorFinishedError
from .stats import WindowState, statistic_windowed, _as_matrix
from .training import TrainingSummary
from .weights import build_weight_plan

__all__ = [
    "DetectorConfig",
    "StepResult",
    "DetectionReport",
    "Detector",
    "localize",
]


@dataclass(frozen=True)
class DetectorConfig:
    """Monitoring parameters.

    window: rolling window length H.
    threshold: alarm level for the standardized statistic.
    dep_order: override of the training dependence order (None = use trained).
    evaluate_from: first post-training index eligible for an alarm.
    """

    window: int
    threshold: float
    dep_order: Optional[int] = None
    evaluate_from: int = 1

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ConfigurationError(f"window must be >= 1, got {self.window}")
        if self.threshold <= 0:
            raise ConfigurationError(f"threshold must be > 0, got {self.threshold}")
        if self.dep_order is not None and self.dep_order < 0:
            raise ConfigurationError(f"dep_order must be >= 0, got {self.dep_order}")
        if self.evaluate_from < 1:
            raise ConfigurationError(
                f"evaluate_from must be >= 1, got {self.evaluate_from}"
            )


@dataclass(frozen=True)
class StepResult:
    """Outcome of one Detector.step call."""

    index: int
    state: str  # "filling" | "monitoring" | "alarm"
    std_stat: Optional[float]
    stopping_time: Optional[int]


@dataclass(frozen=True)
class DetectionReport:
    """Summary of a finished (or interrupted) monitoring run."""

    stopping_time: Optional[int]
    alarm_statistic: Optional[float]
    trajectory: list
    tau_hat: Optional[int] = None
    delay_vs_tau_hat: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "stopping_time": self.stopping_time,
            "alarm_statistic": self.alarm_statistic,
            "trajectory": list(self.trajectory),
            "tau_hat": self.tau_hat,
            "delay_vs_tau_hat": self.delay_vs_tau_hat,
        }


class Detector:
    """Streaming change detector for the covariance structure.

    prime: "auto" pushes the training tail kept in the summary so the first
    post-training observation already completes the window; an array primes
    with those rows instead; None starts with an empty window (the first
    window-1 observations are then spent filling it).
    """

    def __init__(
        self,
        summary: TrainingSummary,
        config: DetectorConfig,
        prime: object = "auto",
    ) -> None:
        if config.window != summary.window:
            raise ConfigurationError(
                f"config window {config.window} does not match the summary "
                f"window {summary.window}"
            )
        self.summary = summary
        self.config = config
        self.dep_order = (
            summary.dep_order if config.dep_order is None else config.dep_order
        )
        self.plan = build_weight_plan(config.window, self.dep_order)
        self._mean = np.asarray(summary.mean, dtype=np.float64)
        self._state = WindowState(config.window)
        self._steps = 0
        self._finished = False
        self._alarm_stat: Optional[float] = None
        self._stopping_time: Optional[int] = None
        self.trajectory: list = []
        if isinstance(prime, str):
            if prime != "auto":
                raise ConfigurationError(f"unknown prime mode {prime!r}")
            rows = summary.train_tail
        else:
            rows = prime
        if rows is not None:
            rows = _as_matrix(np.asarray(rows, dtype=np.float64), "prime")
            if rows.shape[1] != self.summary.p:
                raise ConfigurationError(
                    f"priming rows have {rows.shape[1]} columns, expected "
                    f"{self.summary.p}"
                )
            for row in rows:
                self._state.push(row, self._mean)

    @property
    def steps(self) -> int:
        """Number of post-training observations consumed so far."""
        return self._steps

    @property
    def finished(self) -> bool:
        return self._finished

    @property
    def stopping_time(self) -> Optional[int]:
        return self._stopping_time

    def step(self, x: Sequence[float]) -> StepResult:
        """Consume one observation; returns the monitoring state after it."""
        if self._finished:
            raise DetectorFinishedError(
                "detector already alarmed; build a new one to keep monitoring"
            )
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.summary.p:
            raise DataError(
                f"observation must be a length-{self.summary.p} vector, got "
                f"shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise DataError("observation contains non-finite values")
        self._steps += 1
        self._state.push(x, self._mean)
        if not self._state.full or self._steps < self.config.evaluate_from:
            return StepResult(self._steps, "filling", None, None)
        raw = statistic_windowed(self._state, self.plan)
        std_stat = float(raw / self.summary.null_sd)
        self.trajectory.append(std_stat)
        if abs(std_stat) > self.config.threshold:
            self._finished = True
            self._alarm_stat = std_stat
            self._stopping_time = self._steps
            return StepResult(self._steps, "alarm", std_stat, self._steps)
        return StepResult(self._steps, "monitoring", std_stat, None)

    def build_report(self, history=None) -> DetectionReport:
        """Assemble a DetectionReport; pass the full observed stream (training
        plus monitoring rows) as history to include a change-point estimate."""
        tau_hat = None
        delay = None
        if history is not None:
            tau_hat = localize(history, self.summary, dep_order=self.dep_order)
            if tau_hat is not None and self._stopping_time is not None:
                delay = self.summary.n0 + self._stopping_time - tau_hat
        return DetectionReport(
            stopping_time=self._stopping_time,
            alarm_statistic=self._alarm_stat,
            trajectory=list(self.trajectory),
            tau_hat=tau_hat,
            delay_vs_tau_hat=delay,
        )


def localize(
    history, summary: TrainingSummary, dep_order: Optional[int] = None
) -> Optional[int]:
    """Estimate the change point from an observed stream.

    history holds the full stream (rows = observations, training included);
    the returned value is the estimated number of pre-change observations,
    i.e. rows 1..tau_hat come before the change.  Returns None when the
    stream is too short to admit any candidate.  Ties pick the earliest
    candidate.
    """
    x = _as_matrix(np.asarray(history, dtype=np.float64), "history")
    if x.shape[1] != summary.p:
        raise DataError(
            f"history has {x.shape[1]} columns, expected {summary.p}"
        )
    m = summary.dep_order if dep_order is None else dep_order
    n = x.shape[0]
    t_lo, t_hi = m + 2, n - m - 2
    if t_hi < t_lo:
        return None
    xc = x - np.asarray(summary.mean, dtype=np.float64)
    gram_sq = (xc @ xc.T) ** 2
    idx = np.arange(n)
    gram_sq[np.abs(idx[:, None] - idx[None, :]) <= m] = 0.0
    csum = gram_sq.cumsum(axis=0).cumsum(axis=1)
    total = csum[-1, -1]

    ts = np.arange(t_lo, t_hi + 1)
    p_block = csum[ts - 1, ts - 1]
    row_pref = csum[ts - 1, -1]
    col_pref = csum[-1, ts - 1]
    s_block = total - row_pref - col_pref + p_block
    x_block = total - p_block - s_block

    alpha = (n - ts - m) / (ts - m - 1)
    beta = (ts - m) / (n - ts - m - 1)
    gamma = (ts - m) * (n - ts - m) / (ts * (n - ts) - m * (m + 1) / 2.0)
    profile = (alpha * p_block + beta * s_block - gamma * x_block) / float(n) ** 2
    return int(ts[int(np.argmax(profile))])
