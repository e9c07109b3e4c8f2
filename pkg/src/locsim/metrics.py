"""Measurements over traces: windowed shortage and loss-of-credibility,
timely throughput, age of information, variance estimators, the deficit
Lyapunov diagnostic, and the constraint-check summary."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import Trace
from .model import ScheduleTargets, SystemConfig

# Reporting window for the rolling LoC sum: 100 intervals ("the past second"
# at 10 ms per interval).
ROLLING_WINDOW = 100


class MetricsError(ValueError):
    """Measurement requested on a trace that cannot support it."""


@dataclass
class WindowState:
    """Streaming view of the last window_T delivery indicators per client,
    with a running window sum (ring buffer semantics)."""

    window_T: int
    buf: np.ndarray
    sums: np.ndarray
    pos: int = 0
    filled: int = 0

    @classmethod
    def empty(cls, window_T: int, n: int) -> "WindowState":
        if window_T < 1:
            raise MetricsError(f"window_T must be >= 1, got {window_T}")
        return cls(
            window_T=window_T,
            buf=np.zeros((window_T, n), dtype=np.int8),
            sums=np.zeros(n, dtype=np.int64),
        )

    def push(self, delivered) -> np.ndarray:
        """Fold in one interval; returns the window sums after the update."""
        row = np.asarray(delivered).astype(np.int8)
        self.sums += row - self.buf[self.pos]
        self.buf[self.pos] = row
        self.pos = (self.pos + 1) % self.window_T
        self.filled = min(self.filled + 1, self.window_T)
        return self.sums.copy()

    def recount(self) -> np.ndarray:
        """Window sums recomputed from the buffer contents."""
        return self.buf.sum(axis=0, dtype=np.int64)


def shortage(window_sum: int, q: float, window_T: int, p: float) -> float:
    """Unbiased shortage: missing deliveries in the window scaled to
    expected-transmission units, floored at zero."""
    if not 0 <= window_sum <= window_T:
        raise MetricsError(f"window_sum {window_sum} outside 0..{window_T}")
    return max((q * window_T - window_sum) / p, 0.0)


def loc_series(trace: Trace, config: SystemConfig) -> np.ndarray:
    """Total loss-of-credibility per interval, for t = window_T+1..horizon
    (earlier intervals are cold-start and excluded)."""
    T = config.window_T
    if trace.horizon <= T:
        raise MetricsError(
            f"horizon {trace.horizon} must exceed window_T {T} for LoC accounting"
        )
    X = trace.cum_deliveries()
    wins = X[T:] - X[:-T]
    theta = np.maximum((config.q * T - wins) / config.p, 0.0)
    return config.cost(theta).sum(axis=1)


def rolling_loc(series, horizon_intervals: int) -> np.ndarray:
    """Trailing sum of `series` over the last `horizon_intervals` entries
    (partial sums during warm-up)."""
    if horizon_intervals < 1:
        raise MetricsError(f"window must be >= 1, got {horizon_intervals}")
    s = np.asarray(series, dtype=float)
    csum = np.concatenate(([0.0], np.cumsum(s)))
    hi = np.arange(1, s.size + 1)
    lo = np.maximum(hi - horizon_intervals, 0)
    return csum[hi] - csum[lo]


def normalized_work(trace: Trace, p=None) -> np.ndarray:
    """S_t = sum_i (X_i(t) - X_i(t-1)) / p_i per interval."""
    parr = trace.config.p if p is None else np.asarray(p, dtype=float)
    return trace.delivered.astype(float) @ (1.0 / parr)


def estimate_sigma_tot(trace: Trace, p=None) -> float:
    """Sample variance of the normalized per-interval work S_t. The centered
    partial sums of S_t form a martingale, so increments are uncorrelated and
    the plain sample variance is consistent for the limiting variance."""
    S = normalized_work(trace, p)
    if S.size < 2:
        raise MetricsError("need at least 2 intervals to estimate a variance")
    return float(S.var(ddof=1))


def estimate_sigma_i(trace: Trace, batch_len: int | None = None) -> np.ndarray:
    """Per-client delivery standard deviation via non-overlapping batch means
    (robust to the autocorrelation scheduling induces). Default batch length
    is floor(sqrt(horizon))."""
    H = trace.horizon
    if batch_len is None:
        batch_len = max(1, math.isqrt(H))
    if batch_len < 1:
        raise MetricsError(f"batch_len must be >= 1, got {batch_len}")
    n_batches = H // batch_len
    if n_batches < 2:
        raise MetricsError(
            f"batch_len {batch_len} too large for horizon {H} (need >= 2 batches)"
        )
    counts = (
        trace.delivered[: n_batches * batch_len]
        .astype(float)
        .reshape(n_batches, batch_len, -1)
        .sum(axis=1)
    )
    return np.sqrt(counts.var(axis=0, ddof=1) / batch_len)


def lyapunov_diag(deficit_series) -> tuple[np.ndarray, np.ndarray]:
    """Lyapunov value L = 0.5 * sum_i (d_i - mean(d))^2 and deficit spread
    max(d) - min(d), per row of the deficit history."""
    if deficit_series is None:
        raise MetricsError("trace has no deficit history (not a deficit policy)")
    d = np.asarray(deficit_series, dtype=float)
    if d.ndim != 2:
        raise MetricsError(f"deficit history must be 2-D, got shape {d.shape}")
    dev = d - d.mean(axis=1, keepdims=True)
    return 0.5 * (dev * dev).sum(axis=1), d.max(axis=1) - d.min(axis=1)


def aoi_series(trace: Trace) -> np.ndarray:
    """Age of information at the start of each interval: intervals since the
    last delivery, starting at 1 and resetting to 1 the interval after a
    delivery."""
    H, n = trace.delivered.shape
    t_idx = np.arange(1, H + 1).reshape(-1, 1)
    marks = np.where(trace.delivered, t_idx, 0)
    last = np.vstack([np.zeros((1, n), dtype=np.int64), np.maximum.accumulate(marks, axis=0)[:-1]])
    return t_idx - last


@dataclass(frozen=True)
class MetricsReport:
    """Per-run measurement bundle (arrays are aligned to t = window_T+1..horizon
    except deficit_spread_series, which covers every interval)."""

    policy: str
    seed: int
    epsilon: float
    loc_series: np.ndarray
    rolling_loc: np.ndarray
    mean_rolling_loc: float
    xbar_emp: np.ndarray
    sigma_i_emp: np.ndarray
    sigma_tot_emp: float
    aoi_mean: np.ndarray
    deficit_spread_series: np.ndarray | None
    constraint_checks: dict[str, float]


def summarize(trace: Trace, config: SystemConfig, targets: ScheduleTargets) -> MetricsReport:
    """Populate a MetricsReport: throughputs, variances, AoI, LoC series, and
    the capacity-identity checks."""
    if trace.delivered.shape[1] != config.n:
        raise MetricsError("trace and config disagree on the client count")
    H = trace.horizon
    X_final = trace.cum_deliveries()[-1]
    xbar_emp = X_final / H

    loc = loc_series(trace, config)
    rolling = rolling_loc(loc, ROLLING_WINDOW)
    sigma_i = estimate_sigma_i(trace)
    sigma_tot_var = estimate_sigma_tot(trace, config.p)
    sigma_tot = math.sqrt(sigma_tot_var)

    S = normalized_work(trace, config.p)
    capacity = config.tau - targets.idle_full
    eq2_residual = float(S.mean() - capacity)
    eq2_se = float(S.std(ddof=1) / math.sqrt(H)) if H > 1 else 0.0
    eq4_residual = float(np.sum(xbar_emp / config.p) - capacity)
    eq7_slack = float(np.sum(sigma_i / config.p) - sigma_tot)

    spread = None
    if trace.deficits is not None:
        _, spread_all = lyapunov_diag(trace.deficits)
        spread = spread_all[1:]  # spread at the end of intervals 1..horizon

    return MetricsReport(
        policy=trace.policy,
        seed=config.seed,
        epsilon=config.epsilon,
        loc_series=loc,
        rolling_loc=rolling,
        mean_rolling_loc=float(rolling.mean()),
        xbar_emp=xbar_emp,
        sigma_i_emp=sigma_i,
        sigma_tot_emp=sigma_tot,
        aoi_mean=aoi_series(trace).mean(axis=0),
        deficit_spread_series=spread,
        constraint_checks={
            "eq2_residual": eq2_residual,
            "eq2_se": eq2_se,
            "eq4_residual": eq4_residual,
            "eq7_slack": eq7_slack,
        },
    )
