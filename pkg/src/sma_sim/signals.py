"""Drive and identification excitation signals on a uniform time grid."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, EmptyWindowError, ParameterError, UnitMismatchError

UNITS = ("V", "A", "W", "°C", "m")

DEFAULT_SAMPLE_RATE_HZ = 1000.0


def _fmt(x: float) -> str:
    return "%.17g" % x


@dataclass(frozen=True, eq=False)
class Waveform:
    """Uniformly sampled signal.

    Sample ``k`` sits at ``t0_s + k / sample_rate_hz``. ``samples`` is stored as
    a read-only float64 array so a waveform can be shared freely.
    """

    sample_rate_hz: float
    samples: np.ndarray
    unit: str
    t0_s: float = 0.0

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.float64).reshape(-1)
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        if not self.sample_rate_hz > 0:
            raise ParameterError("sample_rate_hz", f"must be > 0, got {self.sample_rate_hz}")
        if arr.size < 1:
            raise ParameterError("samples", "waveform needs at least one sample")
        if self.unit not in UNITS:
            raise ParameterError("unit", f"{self.unit!r} is not one of {UNITS}")

    def __len__(self):
        return self.samples.size

    def __eq__(self, other):
        if not isinstance(other, Waveform):
            return NotImplemented
        return (
            self.sample_rate_hz == other.sample_rate_hz
            and self.unit == other.unit
            and self.t0_s == other.t0_s
            and np.array_equal(self.samples, other.samples)
        )

    @property
    def dt_s(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def times(self) -> np.ndarray:
        return self.t0_s + np.arange(self.samples.size) / self.sample_rate_hz

    def require_unit(self, unit: str) -> None:
        if self.unit != unit:
            raise UnitMismatchError(f"expected a waveform in {unit}, got {self.unit}")

    def with_samples(self, samples, unit: str | None = None) -> "Waveform":
        return Waveform(self.sample_rate_hz, samples, unit or self.unit, self.t0_s)


@dataclass(frozen=True)
class PwmSpec:
    frequency_hz: float
    duty_fraction: float
    amplitude_volts: float
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    duration_s: float = 32.0

    def __post_init__(self):
        if not self.frequency_hz > 0:
            raise ParameterError("frequency_hz", f"must be > 0, got {self.frequency_hz}")
        if not 0.0 <= self.duty_fraction <= 1.0:
            raise ParameterError("duty_fraction", f"must lie in [0, 1], got {self.duty_fraction}")
        if not math.isfinite(self.amplitude_volts):
            raise ParameterError("amplitude_volts", "must be finite")
        if not self.sample_rate_hz >= 100.0 * self.frequency_hz:
            raise ParameterError(
                "sample_rate_hz",
                f"must be >= 100 x frequency_hz ({100.0 * self.frequency_hz}), got {self.sample_rate_hz}",
            )
        if not self.duration_s > 0:
            raise ParameterError("duration_s", f"must be > 0, got {self.duration_s}")


@dataclass(frozen=True)
class MultisineSpec:
    max_freq_hz: float
    line_spacing_hz: float
    amplitude: float = 1.0
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    duration_s: float = 32.0
    phase_seed: int = 0

    def __post_init__(self):
        if not self.line_spacing_hz > 0:
            raise ParameterError("line_spacing_hz", f"must be > 0, got {self.line_spacing_hz}")
        if self.max_freq_hz < self.line_spacing_hz:
            raise ParameterError(
                "max_freq_hz",
                f"{self.max_freq_hz} Hz is below line_spacing_hz {self.line_spacing_hz} Hz: no spectral lines",
            )
        if not self.sample_rate_hz > 0:
            raise ParameterError("sample_rate_hz", f"must be > 0, got {self.sample_rate_hz}")
        if self.max_freq_hz >= self.sample_rate_hz / 2:
            raise ParameterError("max_freq_hz", "must lie below the Nyquist frequency")
        if self.duration_s < 1.0 / self.line_spacing_hz:
            raise ParameterError(
                "duration_s", f"must cover one period 1/line_spacing_hz = {1.0 / self.line_spacing_hz} s"
            )

    def lines_hz(self) -> np.ndarray:
        count = int(math.floor(self.max_freq_hz / self.line_spacing_hz + 1e-9))
        return self.line_spacing_hz * np.arange(1, count + 1)


def generate_pwm(spec: PwmSpec) -> Waveform:
    """Ideal square PWM, ON at the start of every period."""
    n = int(round(spec.duration_s * spec.sample_rate_hz))
    if n < 1:
        raise ParameterError("duration_s", "shorter than one sample")
    k = np.arange(n, dtype=np.float64)
    # mod before dividing keeps integer frequency/rate pairs exact
    phase = np.mod(k * spec.frequency_hz, spec.sample_rate_hz) / spec.sample_rate_hz
    v = np.where(phase < spec.duty_fraction, spec.amplitude_volts, 0.0)
    return Waveform(spec.sample_rate_hz, v, "V")


def generate_multisine(spec: MultisineSpec, unit: str = "m") -> Waveform:
    """Equal-amplitude random-phase multisine, scaled to a peak of ``spec.amplitude``."""
    lines = spec.lines_hz()
    rng = np.random.default_rng(spec.phase_seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=lines.size)
    n = int(round(spec.duration_s * spec.sample_rate_hz))
    t = np.arange(n) / spec.sample_rate_hz
    x = np.zeros(n)
    for f, ph in zip(lines, phases):
        x += np.cos(2.0 * np.pi * f * t + ph)
    x *= spec.amplitude / np.max(np.abs(x))
    return Waveform(spec.sample_rate_hz, x, unit)


def steady_state_window(w: Waveform, skip_s: float) -> Waveform:
    """Drop the first ``skip_s`` seconds; keeps samples with ``t >= t0 + skip_s``."""
    if skip_s < 0:
        raise ParameterError("skip_s", f"must be >= 0, got {skip_s}")
    if skip_s >= w.duration_s:
        raise EmptyWindowError(f"skip of {skip_s} s leaves nothing of a {w.duration_s} s waveform")
    k0 = int(math.ceil(skip_s * w.sample_rate_hz - 1e-9))
    if k0 >= len(w):
        raise EmptyWindowError(f"skip of {skip_s} s leaves nothing of a {w.duration_s} s waveform")
    return Waveform(w.sample_rate_hz, w.samples[k0:], w.unit, w.t0_s + k0 / w.sample_rate_hz)


def write_waveform_csv(w: Waveform, path) -> None:
    buf = io.StringIO(newline="")
    buf.write(f"# unit: {w.unit}\n")
    buf.write(f"# sample_rate_hz: {_fmt(w.sample_rate_hz)}\n")
    buf.write("time_s,value\n")
    for t, v in zip(w.times(), w.samples):
        buf.write(f"{_fmt(t)},{_fmt(v)}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def read_waveform_csv(path) -> Waveform:
    meta = {}
    times, values = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
                continue
            if line.startswith("time_s"):
                continue
            t, v = line.split(",")
            times.append(float(t))
            values.append(float(v))
    if "unit" not in meta or not values:
        raise ConfigError(f"{path}: not a waveform CSV (needs '# unit:' header and samples)")
    if "sample_rate_hz" in meta:
        fs = float(meta["sample_rate_hz"])
    elif len(times) > 1:
        fs = 1.0 / (times[1] - times[0])
    else:
        raise ConfigError(f"{path}: cannot infer the sample rate")
    return Waveform(fs, values, meta["unit"], times[0])
