"""Zero-stress cosine phase kinetics with thermal hysteresis.

The martensite fraction ``xi`` moves only inside the transformation bands:
towards 0 on heating through [A_s, A_f], towards 1 on cooling through
[M_s, M_f]. A branch that starts inside its band (after a trend reversal) is
rescaled so that ``xi`` stays continuous and still reaches its end value at
the band edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import ParameterError

IDLE, HEATING, COOLING = "idle", "heating", "cooling"
BRANCH_CODES = {IDLE: 0, HEATING: 1, COOLING: 2}
BRANCH_NAMES = {v: k for k, v in BRANCH_CODES.items()}

TREND_DEADBAND_C = 0.01


@dataclass(frozen=True)
class KineticsSpec:
    M_f_C: float = 65.0
    M_s_C: float = 75.0
    A_s_C: float = 85.0
    A_f_C: float = 95.0
    max_strain: float = 0.04

    def __post_init__(self):
        if not (self.M_f_C < self.M_s_C <= self.A_s_C < self.A_f_C):
            raise ParameterError(
                "M_f_C", f"need M_f < M_s <= A_s < A_f, got {self.M_f_C}, {self.M_s_C}, {self.A_s_C}, {self.A_f_C}"
            )
        if not 0.0 < self.max_strain <= 0.08:
            raise ParameterError("max_strain", f"must lie in (0, 0.08], got {self.max_strain}")


@dataclass(frozen=True)
class TransmissionSpec:
    gain: float = 4.0
    wire_length_m: float = 0.015
    bias_offset_m: float = 0.0

    def __post_init__(self):
        if not self.gain > 0:
            raise ParameterError("gain", f"must be > 0, got {self.gain}")
        if not self.wire_length_m > 0:
            raise ParameterError("wire_length_m", f"must be > 0, got {self.wire_length_m}")

    def stroke_m(self, spec: KineticsSpec) -> float:
        """Output travel between full martensite and full austenite."""
        return self.gain * spec.max_strain * self.wire_length_m


@dataclass(frozen=True)
class PhaseState:
    """Martensite fraction plus the bookkeeping needed for branch switching.

    ``T_branch_C`` is the temperature at which the current branch started and
    ``T_ref_C`` the last temperature that registered as a trend (``None``
    before the first update).
    """

    xi: float = 1.0
    branch: str = IDLE
    xi_at_branch_start: float = 1.0
    T_branch_C: float = -math.inf
    T_ref_C: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.xi <= 1.0:
            raise ParameterError("xi", f"must lie in [0, 1], got {self.xi}")
        if not 0.0 <= self.xi_at_branch_start <= 1.0:
            raise ParameterError("xi_at_branch_start", f"must lie in [0, 1], got {self.xi_at_branch_start}")
        if self.branch not in BRANCH_CODES:
            raise ParameterError("branch", f"unknown branch {self.branch!r}")


def heating_progress(T: float, spec: KineticsSpec) -> float:
    """0 at A_s, 1 at A_f, cosine in between."""
    s = (T - spec.A_s_C) / (spec.A_f_C - spec.A_s_C)
    s = min(max(s, 0.0), 1.0)
    return 0.5 * (1.0 - math.cos(math.pi * s))


def cooling_progress(T: float, spec: KineticsSpec) -> float:
    """0 at M_s, 1 at M_f, cosine in between."""
    s = (spec.M_s_C - T) / (spec.M_s_C - spec.M_f_C)
    s = min(max(s, 0.0), 1.0)
    return 0.5 * (1.0 - math.cos(math.pi * s))


def update_phase(state: PhaseState, T_C: float, spec: KineticsSpec, deadband_C: float = TREND_DEADBAND_C) -> PhaseState:
    xi = state.xi
    branch = state.branch
    xi_b = state.xi_at_branch_start
    T_b = state.T_branch_C
    T_ref = state.T_ref_C
    if T_ref is None:
        return PhaseState(xi, branch, xi_b, T_b, T_C)

    trend = None
    if T_C - T_ref > deadband_C:
        trend = HEATING
    elif T_C - T_ref < -deadband_C:
        trend = COOLING
    if trend is not None:
        if trend != branch:
            branch, xi_b, T_b = trend, xi, T_ref
        T_ref = T_C

    if branch == HEATING:
        if T_C >= spec.A_f_C:
            target = 0.0
        else:
            # T_b < A_f here, otherwise the branch would already sit at xi = 0
            g_b = heating_progress(T_b, spec)
            target = xi_b * (1.0 - heating_progress(T_C, spec)) / (1.0 - g_b) if g_b < 1.0 else 0.0
        xi = min(xi, target)
    elif branch == COOLING:
        if T_C <= spec.M_f_C:
            target = 1.0
        else:
            g_b = cooling_progress(T_b, spec)
            target = xi_b + (1.0 - xi_b) * (cooling_progress(T_C, spec) - g_b) / (1.0 - g_b) if g_b < 1.0 else 1.0
        xi = max(xi, target)
    xi = min(max(xi, 0.0), 1.0)
    return PhaseState(xi, branch, xi_b, T_b, T_ref)


def displacement(xi: float, spec: KineticsSpec, trans: TransmissionSpec) -> float:
    """Actuator output; full austenite (xi = 0) gives the largest stroke."""
    if not 0.0 <= xi <= 1.0:
        raise ParameterError("xi", f"must lie in [0, 1], got {xi}")
    return trans.bias_offset_m + trans.gain * spec.max_strain * trans.wire_length_m * (1.0 - xi)
