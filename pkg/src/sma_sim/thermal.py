"""Lumped-capacitance electro-thermal model of an SMA wire.

One node (the wire) when it sits directly in the medium, two nodes (wire and
chamber air) when it is enclosed in an insulating chamber.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericDegeneracyError, ParameterError
from .signals import Waveform

ABSOLUTE_ZERO_C = -273.15

# NiTi handbook values, not measured on the actuator
NITI_DENSITY = 6450.0
NITI_SPECIFIC_HEAT = 500.0
NITI_RESISTIVITY = 8e-7

DEFAULT_RESISTANCE_OHM = 10.8  # 2.7 V / 250 mA operating point


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ParameterError(name, f"must be a finite number > 0, got {value!r}")


@dataclass(frozen=True)
class WireSpec:
    diameter_m: float = 38.1e-6
    length_m: float = 0.015
    density_kg_m3: float = NITI_DENSITY
    specific_heat_J_kgK: float = NITI_SPECIFIC_HEAT
    resistance_ohm: float = DEFAULT_RESISTANCE_OHM

    def __post_init__(self):
        for name in ("diameter_m", "length_m", "density_kg_m3", "specific_heat_J_kgK", "resistance_ohm"):
            _positive(name, getattr(self, name))
        if not self.diameter_m < self.length_m:
            raise ParameterError("diameter_m", "must be smaller than length_m")

    @property
    def cross_section_m2(self) -> float:
        return math.pi * self.diameter_m**2 / 4.0

    @property
    def surface_area_m2(self) -> float:
        """Lateral area; the end faces are negligible."""
        return math.pi * self.diameter_m * self.length_m

    @property
    def mass_kg(self) -> float:
        return self.density_kg_m3 * self.cross_section_m2 * self.length_m

    @property
    def heat_capacity_J_K(self) -> float:
        return self.mass_kg * self.specific_heat_J_kgK


@dataclass(frozen=True)
class MediumSpec:
    name: str
    h_W_m2K: float
    ambient_temp_C: float = 23.0

    def __post_init__(self):
        _positive("h_W_m2K", self.h_W_m2K)
        if not -20.0 <= self.ambient_temp_C <= 100.0:
            raise ParameterError("ambient_temp_C", f"must lie in [-20, 100], got {self.ambient_temp_C}")


@dataclass(frozen=True)
class ChamberSpec:
    gap_conductance_W_K: float
    wall_conductance_W_K: float
    chamber_heat_capacity_J_K: float

    def __post_init__(self):
        for name in ("gap_conductance_W_K", "wall_conductance_W_K", "chamber_heat_capacity_J_K"):
            _positive(name, getattr(self, name))

    @property
    def effective_conductance_W_K(self) -> float:
        """Series wire-to-medium conductance at steady state."""
        g1, g2 = self.gap_conductance_W_K, self.wall_conductance_W_K
        return g1 * g2 / (g1 + g2)


@dataclass(frozen=True)
class ThermalState:
    T_wire_C: float
    T_chamber_C: float

    def __post_init__(self):
        if not (math.isfinite(self.T_wire_C) and math.isfinite(self.T_chamber_C)):
            raise ParameterError("T_wire_C", "temperatures must be finite")
        if self.T_wire_C < ABSOLUTE_ZERO_C:
            raise ParameterError("T_wire_C", f"below absolute zero: {self.T_wire_C}")

    @classmethod
    def ambient(cls, medium: MediumSpec) -> "ThermalState":
        return cls(medium.ambient_temp_C, medium.ambient_temp_C)


def convective_conductance(wire: WireSpec, medium: MediumSpec) -> float:
    return medium.h_W_m2K * wire.surface_area_m2


def thermal_time_constant(wire: WireSpec, medium: MediumSpec) -> float:
    """tau = m c / (h A); independent of the wire length."""
    return wire.heat_capacity_J_K / convective_conductance(wire, medium)


def electrical_power(drive: Waveform, resistance_ohm: float) -> Waveform:
    """Joule power V^2 / R of a voltage drive across a constant resistance."""
    drive.require_unit("V")
    _positive("resistance_ohm", resistance_ohm)
    return drive.with_samples(drive.samples**2 / resistance_ohm, "W")


def step_single_node(state: ThermalState, power_W: float, dt_s: float, wire: WireSpec, medium: MediumSpec) -> ThermalState:
    """Advance the bare-wire node by ``dt_s`` with power held constant.

    Uses the exact solution of ``m c dT/dt = P - h A (T - T_amb)``, so the
    step is unconditionally stable and exact for piecewise-constant power.
    """
    _positive("dt_s", dt_s)
    if power_W < 0:
        raise ParameterError("power_W", f"must be >= 0, got {power_W}")
    g = convective_conductance(wire, medium)
    t_ss = medium.ambient_temp_C + power_W / g
    decay = math.exp(-dt_s * g / wire.heat_capacity_J_K)
    return ThermalState(t_ss + (state.T_wire_C - t_ss) * decay, medium.ambient_temp_C)


def two_node_step_matrix(dt_s: float, wire: WireSpec, chamber: ChamberSpec) -> np.ndarray:
    """Inverse of the backward-Euler system matrix for the wire/chamber pair."""
    cw = wire.heat_capacity_J_K / dt_s
    cc = chamber.chamber_heat_capacity_J_K / dt_s
    gg, gw = chamber.gap_conductance_W_K, chamber.wall_conductance_W_K
    m00, m01, m10, m11 = cw + gg, -gg, -gg, cc + gg + gw
    det = m00 * m11 - m01 * m10  # Python floats: overflow gives inf, not a warning
    if not (math.isfinite(det) and abs(det) > 1e-300):
        raise NumericDegeneracyError(f"singular two-node step matrix (det={det})")
    return np.array([[m11, -m01], [-m10, m00]]) / det


def step_two_node(
    state: ThermalState,
    power_W: float,
    dt_s: float,
    wire: WireSpec,
    medium: MediumSpec,
    chamber: ChamberSpec,
) -> ThermalState:
    """Backward-Euler step of the wire / chamber-air pair.

    m c dTw/dt = P - G_gap (Tw - Tch)
    C_ch dTch/dt = G_gap (Tw - Tch) - G_wall (Tch - T_amb)
    """
    _positive("dt_s", dt_s)
    inv = two_node_step_matrix(dt_s, wire, chamber)
    rhs0 = wire.heat_capacity_J_K / dt_s * state.T_wire_C + power_W
    rhs1 = chamber.chamber_heat_capacity_J_K / dt_s * state.T_chamber_C + chamber.wall_conductance_W_K * medium.ambient_temp_C
    tw = inv[0, 0] * rhs0 + inv[0, 1] * rhs1
    tc = inv[1, 0] * rhs0 + inv[1, 1] * rhs1
    return ThermalState(float(tw), float(tc))


def with_h(medium: MediumSpec, factor: float) -> MediumSpec:
    return replace(medium, h_W_m2K=medium.h_W_m2K * factor)
