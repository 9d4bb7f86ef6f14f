"""Windowed tail-ratio sequences: the shared finite-horizon machinery.

Limits like limsup F̄(vx)/F̄(x) are undecidable from finite data, so every
estimator in the package works with the same honest construction: evaluate
the ratio along the grid prefix where it is defined, form a window over the
last third of that prefix, and report window extrema plus an end-of-window
trend (least-squares slope of the log-ratio per grid step).

Ratios are computed in log space.  Closed-form families expose log-survival
directly, so dilation and shift ratios stay exact far beyond the point
where the survival value itself underflows; quadrature-backed models fall
back to log of the clamped value and their sequences simply stop earlier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnderflowBeforeWindowError
from .models import GridSpec, TailModel

MIN_VALID = 6          # fewer defined ratio points than this: no window
TREND_POINTS = 5       # end-trend fits the last few window points

# Trend thresholds (log-slope per grid step).
TREND_STABLE = 1e-4    # |trend| below this: sequence treated as stabilized
TREND_BOUNDED = 1e-2   # growth above this refutes bounded-limsup claims


@dataclass(frozen=True)
class RatioSequence:
    """Log-ratio diagnostics along a grid prefix."""

    xs: np.ndarray           # denominator arguments x_k
    log_ratios: np.ndarray   # ln[ numerator(x_k) / denominator(x_k) ]
    window_start: int
    horizon: float           # last x in the valid prefix

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_ratios)

    @property
    def window(self) -> np.ndarray:
        return self.log_ratios[self.window_start:]

    @property
    def wmax_log(self) -> float:
        return float(np.max(self.window))

    @property
    def wmin_log(self) -> float:
        return float(np.min(self.window))

    @property
    def trend(self) -> float:
        """End-of-window log-slope per grid step."""
        tail = self.log_ratios[-min(TREND_POINTS, len(self.window)):]
        if len(tail) < 2:
            return 0.0
        k = np.arange(len(tail), dtype=float)
        return float(np.polyfit(k, tail, 1)[0])

    @property
    def window_trend(self) -> float:
        """Log-slope per step fitted over the whole window."""
        w = self.window
        if len(w) < 2:
            return 0.0
        k = np.arange(len(w), dtype=float)
        return float(np.polyfit(k, w, 1)[0])

    @property
    def stabilized(self) -> bool:
        return abs(self.trend) <= TREND_STABLE

    @property
    def increasing(self) -> bool:
        return self.trend > TREND_STABLE

    @property
    def decreasing(self) -> bool:
        return self.trend < -TREND_STABLE

    def summary(self) -> dict:
        return {
            "window_start_x": float(self.xs[self.window_start]),
            "horizon": float(self.horizon),
            "wmax": float(np.exp(min(self.wmax_log, 700.0))),
            "wmin": float(np.exp(min(self.wmin_log, 700.0))),
            "trend": self.trend,
            "n_points": int(len(self.xs)),
        }


def _build(xs: np.ndarray, num_log: np.ndarray, den_log: np.ndarray) -> RatioSequence:
    valid = np.isfinite(num_log) & np.isfinite(den_log)
    # Keep the contiguous prefix: past the first undefined point the tail
    # has genuinely run out (underflow or beyond the right endpoint).
    if not valid.all():
        first_bad = int(np.argmin(valid))
        valid[first_bad:] = False
    n = int(valid.sum())
    if n < MIN_VALID:
        raise UnderflowBeforeWindowError(
            f"only {n} defined ratio points before underflow; need {MIN_VALID}"
        )
    xs = xs[:n]
    with np.errstate(invalid="ignore"):
        logs = (num_log - den_log)[:n]
    window_start = (2 * n) // 3
    return RatioSequence(xs=xs, log_ratios=logs, window_start=window_start,
                         horizon=float(xs[-1]))


def build_sequence(xs: np.ndarray, num_log: np.ndarray, den_log: np.ndarray) -> RatioSequence:
    """Public entry for custom numerator/denominator log evaluations."""
    return _build(xs, num_log, den_log)


def dilation_sequence(model: TailModel, factor: float, grid: GridSpec) -> RatioSequence:
    """Sequence F̄(factor * x_k) / F̄(x_k)."""
    xs = grid.points()
    return _build(xs, model.log_sf(factor * xs), model.log_sf(xs))


def shift_sequence(model: TailModel, t: float, grid: GridSpec) -> RatioSequence:
    """Sequence F̄(x_k - t) / F̄(x_k)."""
    xs = grid.points()
    return _build(xs, model.log_sf(xs - t), model.log_sf(xs))


def pair_sequence(num: TailModel, den: TailModel, grid: GridSpec) -> RatioSequence:
    """Sequence num.sf(x_k) / den.sf(x_k) for two different models."""
    xs = grid.points()
    return _build(xs, num.log_sf(xs), den.log_sf(xs))


def log_threshold(value: float) -> float:
    return math.log(value)
