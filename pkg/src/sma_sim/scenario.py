"""One experiment: a plant, a PWM drive, and the analysis window."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .errors import ConfigError, ParameterError
from .plant import ActuatorModel, SimTrace, amplitude_for_peak_temperature, canonical_hash, peak_to_peak, simulate_actuator
from .power import DEFAULT_SKIP_S, PowerMetrics, power_metrics
from .signals import PwmSpec, generate_pwm

SCENARIO_SCHEMA = "sma-sim/scenario-1"


@dataclass(frozen=True)
class ScenarioConfig:
    """A drive applied to a plant, plus the repeat protocol used by campaigns.

    When ``peak_temp_setpoint_C`` is set, ``drive.amplitude_volts`` is ignored
    and the amplitude is sized so the steady-state wire temperature peaks at
    the setpoint (see :func:`amplitude_for_peak_temperature`).
    """

    plant: ActuatorModel
    drive: PwmSpec
    duration_s: float = 32.0
    skip_s: float = DEFAULT_SKIP_S
    repeats: int = 5
    noise_seed: int = 0
    noise_level: float = 0.02
    label: Optional[str] = None
    peak_temp_setpoint_C: Optional[float] = None

    def __post_init__(self):
        if not (isinstance(self.repeats, int) and self.repeats >= 1):
            raise ParameterError("repeats", f"must be an integer >= 1, got {self.repeats!r}")
        if not 0 <= self.skip_s < self.duration_s:
            raise ParameterError("skip_s", f"must lie in [0, duration_s={self.duration_s}), got {self.skip_s}")
        if not self.noise_level >= 0:
            raise ParameterError("noise_level", f"must be >= 0, got {self.noise_level}")

    @property
    def name(self) -> str:
        return self.label or self.plant.medium.name

    def with_pair(self, frequency_hz: float, duty_fraction: float) -> "ScenarioConfig":
        return replace(self, drive=replace(self.drive, frequency_hz=frequency_hz, duty_fraction=duty_fraction))

    def pwm(self) -> PwmSpec:
        """Drive spec actually applied, with the amplitude resolved."""
        spec = replace(self.drive, duration_s=self.duration_s)
        if self.peak_temp_setpoint_C is not None:
            volts = amplitude_for_peak_temperature(self.plant, spec, self.peak_temp_setpoint_C, self.skip_s)
            spec = replace(spec, amplitude_volts=volts)
        return spec

    def run(self, warn: bool = True) -> "ScenarioOutcome":
        pwm = self.pwm()
        trace = simulate_actuator(self.plant, generate_pwm(pwm), warn=warn)
        metrics = power_metrics(trace.waveform("power_W"), self.skip_s)
        amp = peak_to_peak(trace.waveform("displacement_m"), self.skip_s)
        return ScenarioOutcome(pwm, trace, metrics, amp)

    def to_dict(self) -> dict:
        doc = {
            "schema": SCENARIO_SCHEMA,
            "plant": self.plant.to_dict(),
            "drive": asdict(self.drive),
        }
        for f in fields(self):
            if f.name not in ("plant", "drive"):
                doc[f.name] = getattr(self, f.name)
        return doc

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Optional[Path] = None) -> "ScenarioConfig":
        if not isinstance(doc, dict):
            raise ConfigError("scenario document must be a JSON object")
        schema = doc.get("schema", SCENARIO_SCHEMA)
        if schema != SCENARIO_SCHEMA:
            raise ConfigError(f"unsupported scenario schema {schema!r} (expected {SCENARIO_SCHEMA!r})")
        allowed = {f.name for f in fields(cls)} | {"schema", "plant_file", "pairs"}
        unknown = set(doc) - allowed
        if unknown:
            raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
        if "plant" in doc:
            plant = ActuatorModel.from_dict(doc["plant"])
        elif "plant_file" in doc:
            from .plant import load_plant

            path = Path(doc["plant_file"])
            plant = load_plant(path if path.is_absolute() or base_dir is None else base_dir / path)
        else:
            raise ConfigError("scenario needs 'plant' or 'plant_file'")
        drive_doc = doc.get("drive")
        if not isinstance(drive_doc, dict):
            raise ConfigError("scenario needs a 'drive' object")
        drive_doc = dict(drive_doc)
        drive_doc.setdefault("duration_s", doc.get("duration_s", 32.0))
        try:
            drive = PwmSpec(**drive_doc)
            kwargs = {k: doc[k] for k in doc if k in {f.name for f in fields(cls)} - {"plant", "drive"}}
            return cls(plant=plant, drive=drive, **kwargs)
        except TypeError as exc:
            raise ConfigError(f"scenario: {exc}") from None
        except ParameterError as exc:
            raise ConfigError(f"scenario.{exc}") from None

    def config_hash(self) -> str:
        return canonical_hash(self.to_dict())


@dataclass(frozen=True, eq=False)
class ScenarioOutcome:
    pwm: PwmSpec
    trace: SimTrace
    metrics: PowerMetrics
    amplitude_m: float


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None

