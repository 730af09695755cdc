"""The full simulatable actuator: wire, medium, optional chamber, kinetics, transmission."""

from __future__ import annotations

import hashlib
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import _kernel
from .errors import ConfigError, ParameterError
from .kinetics import BRANCH_CODES, BRANCH_NAMES, TREND_DEADBAND_C, KineticsSpec, PhaseState, TransmissionSpec
from .signals import PwmSpec, Waveform, generate_pwm, steady_state_window
from .thermal import ChamberSpec, MediumSpec, ThermalState, WireSpec, convective_conductance

log = logging.getLogger(__name__)

PLANT_SCHEMA = "sma-sim/plant-1"
BURN_WARNING_C = 300.0


@dataclass(frozen=True)
class ActuatorModel:
    wire: WireSpec
    medium: MediumSpec
    kinetics: KineticsSpec = KineticsSpec()
    transmission: TransmissionSpec = TransmissionSpec()
    chamber: Optional[ChamberSpec] = None

    @property
    def stroke_m(self) -> float:
        return self.transmission.stroke_m(self.kinetics)

    @property
    def effective_conductance_W_K(self) -> float:
        """Steady-state wire-to-medium conductance, with or without the chamber."""
        if self.chamber is None:
            return convective_conductance(self.wire, self.medium)
        return self.chamber.effective_conductance_W_K

    def to_dict(self) -> dict:
        return {
            "schema": PLANT_SCHEMA,
            "wire": asdict(self.wire),
            "medium": asdict(self.medium),
            "chamber": None if self.chamber is None else asdict(self.chamber),
            "kinetics": asdict(self.kinetics),
            "transmission": asdict(self.transmission),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ActuatorModel":
        if not isinstance(doc, dict):
            raise ConfigError("plant document must be a JSON object")
        schema = doc.get("schema", PLANT_SCHEMA)
        if schema != PLANT_SCHEMA:
            raise ConfigError(f"unsupported plant schema {schema!r} (expected {PLANT_SCHEMA!r})")
        unknown = set(doc) - {"schema", "wire", "medium", "chamber", "kinetics", "transmission"}
        if unknown:
            raise ConfigError(f"unknown plant fields: {sorted(unknown)}")
        try:
            return cls(
                wire=_build(WireSpec, doc.get("wire", {}), "wire"),
                medium=_build(MediumSpec, doc["medium"], "medium"),
                kinetics=_build(KineticsSpec, doc.get("kinetics", {}), "kinetics"),
                transmission=_build(TransmissionSpec, doc.get("transmission", {}), "transmission"),
                chamber=None if doc.get("chamber") is None else _build(ChamberSpec, doc["chamber"], "chamber"),
            )
        except KeyError as exc:
            raise ConfigError(f"plant document is missing {exc}") from None

    def plant_hash(self) -> str:
        """Hash of the physical device, independent of the medium it runs in.

        Two campaigns of the same actuator in air and in water share this hash;
        adding a chamber or changing the wire changes it.
        """
        doc = self.to_dict()
        del doc["medium"]
        return canonical_hash(doc)


def _build(cls, doc, section):
    if not isinstance(doc, dict):
        raise ConfigError(f"{section}: expected an object")
    names = {f.name for f in fields(cls)}
    unknown = set(doc) - names
    if unknown:
        raise ConfigError(f"{section}: unknown fields {sorted(unknown)}")
    try:
        return cls(**doc)
    except TypeError as exc:
        raise ConfigError(f"{section}: {exc}") from None
    except ParameterError as exc:
        raise ConfigError(f"{section}.{exc}") from None


def canonical_hash(doc) -> str:
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def load_plant(path) -> ActuatorModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return ActuatorModel.from_dict(doc)


def save_plant(model: ActuatorModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True, eq=False)
class SimTrace:
    sample_rate_hz: float
    time_s: np.ndarray
    voltage_V: np.ndarray
    current_A: np.ndarray
    power_W: np.ndarray
    T_wire_C: np.ndarray
    T_chamber_C: np.ndarray
    xi: np.ndarray
    displacement_m: np.ndarray
    final_thermal: ThermalState
    final_phase: PhaseState

    COLUMNS = ("time_s", "voltage_V", "current_A", "power_W", "T_wire_C", "T_chamber_C", "xi", "displacement_m")

    def __len__(self):
        return self.time_s.size

    def waveform(self, column: str) -> Waveform:
        unit = {"voltage_V": "V", "current_A": "A", "power_W": "W", "T_wire_C": "°C",
                "T_chamber_C": "°C", "displacement_m": "m"}[column]
        return Waveform(self.sample_rate_hz, getattr(self, column), unit, float(self.time_s[0]))

    def to_csv(self, path=None, header_lines=()) -> str:
        buf = io.StringIO(newline="")
        for line in header_lines:
            buf.write(f"# {line}\n")
        buf.write(",".join(self.COLUMNS) + "\n")
        cols = [getattr(self, c) for c in self.COLUMNS]
        for row in zip(*cols):
            buf.write(",".join("%.17g" % x for x in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="")
        return text


def simulate_actuator(
    model: ActuatorModel,
    drive: Waveform,
    thermal: Optional[ThermalState] = None,
    phase: Optional[PhaseState] = None,
    warn: bool = True,
) -> SimTrace:
    """Drive -> Joule power -> wire temperature -> phase fraction -> output, per sample.

    Each column holds the state at the sample instant; the sample's power is
    then applied over the following interval. Starts from ambient temperature
    and full martensite unless told otherwise.
    """
    drive.require_unit("V")
    thermal = thermal or ThermalState.ambient(model.medium)
    phase = phase or PhaseState()
    wire, medium, chamber, kin = model.wire, model.medium, model.chamber, model.kinetics
    two_node = chamber is not None
    power, tw, tc, xi, disp, final = _kernel.run_plant(
        drive.samples,
        drive.dt_s,
        wire.resistance_ohm,
        wire.heat_capacity_J_K,
        convective_conductance(wire, medium),
        medium.ambient_temp_C,
        two_node,
        chamber.gap_conductance_W_K if two_node else 0.0,
        chamber.wall_conductance_W_K if two_node else 0.0,
        chamber.chamber_heat_capacity_J_K if two_node else 0.0,
        thermal.T_wire_C,
        thermal.T_chamber_C,
        kin.M_f_C,
        kin.M_s_C,
        kin.A_s_C,
        kin.A_f_C,
        phase.xi,
        BRANCH_CODES[phase.branch],
        phase.xi_at_branch_start,
        phase.T_branch_C,
        math.nan if phase.T_ref_C is None else phase.T_ref_C,
        TREND_DEADBAND_C,
        model.stroke_m,
        model.transmission.bias_offset_m,
    )
    f_tw, f_tc, f_xi, f_branch, f_xib, f_tb, f_tref = final
    if not (np.all(np.isfinite(tw)) and math.isfinite(f_tw)):
        raise ParameterError("plant", "simulation produced non-finite temperatures")
    if warn:
        peak = float(np.max(tw))
        if peak > BURN_WARNING_C:
            log.warning("wire reaches %.0f °C (> %.0f °C burn warning threshold)", peak, BURN_WARNING_C)
        if medium.name == "water" and chamber is None and peak > 100.0:
            log.warning("wire exceeds 100 °C in water; boiling is not modeled")
    for arr in (power, tw, tc, xi, disp):
        arr.flags.writeable = False
    return SimTrace(
        sample_rate_hz=drive.sample_rate_hz,
        time_s=drive.times(),
        voltage_V=drive.samples,
        current_A=drive.samples / wire.resistance_ohm,
        power_W=power,
        T_wire_C=tw,
        T_chamber_C=tc,
        xi=xi,
        displacement_m=disp,
        final_thermal=ThermalState(f_tw, f_tc),
        final_phase=PhaseState(
            min(max(f_xi, 0.0), 1.0), BRANCH_NAMES[int(f_branch)], f_xib, f_tb, None if math.isnan(f_tref) else f_tref
        ),
    )


def peak_to_peak(w: Waveform, skip_s: float) -> float:
    x = steady_state_window(w, skip_s).samples
    return float(np.max(x) - np.min(x))


def amplitude_for_peak_temperature(model: ActuatorModel, pwm: PwmSpec, setpoint_C: float, skip_s: float) -> float:
    """Drive voltage whose steady-state cycle peaks at ``setpoint_C`` at the wire.

    The thermal network is linear in power and power is V^2 / R, so the
    temperature rise scales exactly with V^2: one run at 1 V fixes the answer.
    """
    rise = setpoint_C - model.medium.ambient_temp_C
    if not rise > 0:
        raise ParameterError("setpoint_C", f"must exceed ambient {model.medium.ambient_temp_C} °C, got {setpoint_C}")
    unit = simulate_actuator(model, generate_pwm(replace(pwm, amplitude_volts=1.0)), warn=False)
    unit_rise = float(np.max(steady_state_window(unit.waveform("T_wire_C"), skip_s).samples)) - model.medium.ambient_temp_C
    if not unit_rise > 1e-9:  # below this the rise is rounding residue, not heating
        raise ParameterError("duty_fraction", "drive never heats the wire; cannot size it")
    return math.sqrt(rise / unit_rise)
