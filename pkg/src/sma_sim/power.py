"""Power statistics: instantaneous, windowed average/peak, and across-run summaries."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyWindowError, ParameterError
from .signals import Waveform, steady_state_window

DEFAULT_SKIP_S = 2.0


@dataclass(frozen=True)
class PowerMetrics:
    P_a_W: float
    P_p_W: float
    window_s: float

    def __post_init__(self):
        # tolerate the last-ulp difference between a mean and the max it is bounded by
        if not (0.0 <= self.P_a_W <= self.P_p_W * (1 + 1e-12) + 1e-300):
            raise ParameterError("P_a_W", f"need 0 <= P_a <= P_p, got {self.P_a_W}, {self.P_p_W}")


@dataclass(frozen=True)
class StatSummary:
    mean: float
    esd: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n", "need at least one value")
        if self.esd < 0:
            raise ParameterError("esd", f"must be >= 0, got {self.esd}")


def instantaneous_power(current: Waveform, resistance_ohm: float) -> Waveform:
    """P(t) = I(t)^2 R."""
    current.require_unit("A")
    if not resistance_ohm > 0:
        raise ParameterError("resistance_ohm", f"must be > 0, got {resistance_ohm}")
    return current.with_samples(current.samples**2 * resistance_ohm, "W")


def power_metrics(power: Waveform, skip_s: float = DEFAULT_SKIP_S, prefilter_samples: Optional[int] = None) -> PowerMetrics:
    """Average and peak power over the window after ``skip_s``.

    ``prefilter_samples`` applies a centred moving average before the peak is
    taken (off by default); the average is always taken on the raw samples.
    """
    power.require_unit("W")
    window = steady_state_window(power, skip_s)
    x = window.samples
    if x.size == 0:
        raise EmptyWindowError("empty power window")
    peak_src = x
    if prefilter_samples and prefilter_samples > 1:
        k = np.ones(prefilter_samples) / prefilter_samples
        peak_src = np.convolve(x, k, mode="valid") if x.size >= prefilter_samples else x
    p_a = float(np.mean(x))
    p_p = float(np.max(peak_src))
    if p_a > p_p:  # mean of a constant may round one ulp above it
        p_a = p_p
    return PowerMetrics(p_a, p_p, window.duration_s)


def mean_esd(values: Sequence[float]) -> StatSummary:
    """Mean and experimental (n - 1) standard deviation; ESD is 0 for one value."""
    x = np.asarray(list(values), dtype=np.float64)
    if x.size == 0:
        raise ParameterError("values", "cannot summarize an empty list")
    if np.all(x == x[0]):
        # exact for identical repeats (np.mean may round off)
        return StatSummary(float(x[0]), 0.0, int(x.size))
    m = float(np.mean(x))
    esd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return StatSummary(m, esd, int(x.size))


def percent_increase(new: float, base: float) -> float:
    if not base > 0:
        raise ParameterError("base", f"must be > 0, got {base}")
    return 100.0 * (new - base) / base
