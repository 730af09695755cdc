"""Discrete-time LTI identification of the displacement-sensor path.

Equation-error (ARX) least squares for IIR models, plain least-squares taps
for FIR models, frequency-response evaluation and static compensation.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.signal

from .errors import ConfigError, IdentifiabilityError, InstabilityError, ParameterError
from .signals import Waveform

IIR, FIR = "IIR", "FIR"

RIDGE_SCALE = 1e-10
COND_LIMIT = 1e10


@dataclass(frozen=True, eq=False)
class LtiModel:
    """Rational model B(z^-1) / (1 + a_1 z^-1 + ... + a_na z^-na).

    IIR models are checked for stability when constructed, so an unstable
    instance cannot exist.
    """

    kind: str
    b: np.ndarray
    a: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        a = np.array(self.a, dtype=np.float64).reshape(-1)
        if self.kind not in (IIR, FIR):
            raise ParameterError("kind", f"must be IIR or FIR, got {self.kind!r}")
        if b.size == 0:
            raise ParameterError("b", "needs at least one coefficient")
        if self.kind == FIR and a.size:
            raise ParameterError("a", "FIR models have no feedback coefficients")
        if not self.sample_rate_hz > 0:
            raise ParameterError("sample_rate_hz", f"must be > 0, got {self.sample_rate_hz}")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(a))):
            raise ParameterError("b", "coefficients must be finite")
        if a.size:
            radii = np.abs(np.roots(np.r_[1.0, a]))
            if np.any(radii >= 1.0):
                raise InstabilityError(np.sort(radii)[::-1])
        b.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)

    @property
    def denominator(self) -> np.ndarray:
        return np.r_[1.0, self.a]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "fs": self.sample_rate_hz, "b": self.b.tolist(), "a": self.a.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "LtiModel":
        try:
            return cls(doc["kind"], doc["b"], doc.get("a", []), float(doc["fs"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed model document: {exc}") from None


@dataclass(frozen=True)
class SysIdDataset:
    input: Waveform
    output: Waveform

    def __post_init__(self):
        if len(self.input) != len(self.output):
            raise ParameterError("output", f"length {len(self.output)} differs from input length {len(self.input)}")
        if self.input.sample_rate_hz != self.output.sample_rate_hz:
            raise ParameterError("output", "sample rate differs from the input's")

    @property
    def sample_rate_hz(self) -> float:
        return self.input.sample_rate_hz

    def __len__(self):
        return len(self.input)


@dataclass(frozen=True)
class FrequencyResponse:
    freqs_hz: np.ndarray
    magnitude_db: np.ndarray
    phase_deg: np.ndarray
    valid_upto_hz: float = math.inf

    def to_csv(self, path=None) -> str:
        buf = io.StringIO(newline="")
        if math.isfinite(self.valid_upto_hz):
            buf.write(f"# valid_upto_hz: {self.valid_upto_hz!r}\n")
        buf.write("f_hz,mag_db,phase_deg\n")
        for f, m, p in zip(self.freqs_hz, self.magnitude_db, self.phase_deg):
            buf.write("%.17g,%.17g,%.17g\n" % (f, m, p))
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="")
        return text


def _regressor(u: np.ndarray, y: np.ndarray, na: int, nb: int):
    n = u.size
    p = max(na, nb)
    cols = [-y[p - i : n - i] for i in range(1, na + 1)]
    cols += [u[p - j : n - j] for j in range(0, nb + 1)]
    return np.column_stack(cols), y[p:]


def _solve_normal_equations(phi: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Least squares via the normal equations, with a ridge fallback.

    Columns are scaled to unit norm first; ridge ``RIDGE_SCALE * trace / p``
    is added when the scaled Gram matrix is ill-conditioned or not positive
    definite.
    """
    norms = np.linalg.norm(phi, axis=0)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise IdentifiabilityError("regressor has an all-zero or non-finite column (no excitation)")
    ps = phi / norms
    gram = ps.T @ ps
    rhs = ps.T @ target
    eig = np.linalg.eigvalsh(gram)
    cond = eig[-1] / eig[0] if eig[0] > 0 else math.inf
    if cond > COND_LIMIT:
        gram = gram + RIDGE_SCALE * np.trace(gram) / gram.shape[0] * np.eye(gram.shape[0])
    try:
        factor = scipy.linalg.cho_factor(gram, check_finite=True)
    except (np.linalg.LinAlgError, ValueError):
        raise IdentifiabilityError("regressor is rank deficient even after ridge regularization") from None
    theta = scipy.linalg.cho_solve(factor, rhs)
    if not np.all(np.isfinite(theta)):
        raise IdentifiabilityError("least-squares solution is not finite")
    return theta / norms


def _check_length(data: SysIdDataset, order: int):
    if not (isinstance(order, (int, np.integer)) and order >= 1):
        raise ParameterError("order", f"must be an integer >= 1, got {order!r}")
    if not len(data) > 3 * order:
        raise ParameterError("order", f"dataset of {len(data)} samples is too short for order {order}")


def fit_iir_ls(data: SysIdDataset, order: int) -> LtiModel:
    """Equation-error (ARX) fit with na = nb = ``order``."""
    _check_length(data, order)
    phi, target = _regressor(data.input.samples, data.output.samples, order, order)
    theta = _solve_normal_equations(phi, target)
    return LtiModel(IIR, theta[order:], theta[:order], data.sample_rate_hz)


def fit_fir_ls(data: SysIdDataset, order: int) -> LtiModel:
    """Least-squares taps b_0..b_order."""
    _check_length(data, order)
    phi, target = _regressor(data.input.samples, data.output.samples, 0, order)
    theta = _solve_normal_equations(phi, target)
    return LtiModel(FIR, theta, [], data.sample_rate_hz)


def equation_error_rms(model: LtiModel, data: SysIdDataset) -> float:
    na, nb = model.a.size, model.b.size - 1
    phi, target = _regressor(data.input.samples, data.output.samples, na, nb)
    resid = target - phi @ np.r_[model.a, model.b]
    return float(np.sqrt(np.mean(resid**2)))


def frequency_response(model: LtiModel, freqs_hz: Sequence[float], valid_upto_hz: float = math.inf) -> FrequencyResponse:
    f = np.asarray(freqs_hz, dtype=np.float64).reshape(-1)
    nyq = model.sample_rate_hz / 2.0
    if f.size == 0:
        raise ParameterError("freqs_hz", "no frequencies given")
    if np.any(f < 0) or np.any(f >= nyq):
        raise ParameterError("freqs_hz", f"frequencies must lie in [0, {nyq}) Hz")
    if f.size > 1 and np.any(np.diff(f) <= 0):
        raise ParameterError("freqs_hz", "frequencies must be strictly increasing")
    zinv = np.exp(-2j * np.pi * f / model.sample_rate_hz)
    num = np.polyval(model.b[::-1], zinv)
    den = np.polyval(model.denominator[::-1], zinv)
    h = num / den
    mag = 20.0 * np.log10(np.abs(h))
    phase = np.degrees(np.unwrap(np.angle(h)))
    return FrequencyResponse(f, mag, phase, valid_upto_hz)


def static_gain(model: LtiModel) -> float:
    return float(np.sum(model.b) / np.sum(model.denominator))


def excitation_bandwidth(x: Waveform, floor_fraction: float = 0.1) -> float:
    """Highest frequency up to which every line of the input's line grid is excited.

    The line grid is taken as the multiples of the lowest excited DFT bin
    (mean removed); a line counts as excited when its magnitude exceeds
    ``floor_fraction`` times the strongest line.
    """
    if not 0.0 < floor_fraction < 1.0:
        raise ParameterError("floor_fraction", f"must lie in (0, 1), got {floor_fraction}")
    s = x.samples - np.mean(x.samples)
    mag = np.abs(np.fft.rfft(s))
    mag[0] = 0.0
    peak = mag.max()
    if not peak > 0:
        raise ParameterError("input", "input has no AC content")
    excited = mag > floor_fraction * peak
    nyq_bin = (s.size - 1) // 2  # last bin strictly below Nyquist
    k0 = int(np.argmax(excited))
    m = 1
    while (m + 1) * k0 <= nyq_bin and excited[(m + 1) * k0]:
        m += 1
    return m * k0 * x.sample_rate_hz / s.size


def apply_model(model: LtiModel, x: Waveform) -> Waveform:
    """Filter ``x`` through the model, zero initial conditions."""
    if x.sample_rate_hz != model.sample_rate_hz:
        raise ParameterError("sample_rate_hz", f"signal at {x.sample_rate_hz} Hz, model at {model.sample_rate_hz} Hz")
    y = scipy.signal.lfilter(model.b, model.denominator, x.samples)
    return x.with_samples(y)


def compensate_static(measured: Waveform, gain: float) -> Waveform:
    """Undo a static sensor gain (the path is treated as static inside its valid band)."""
    if gain == 0 or not math.isfinite(gain):
        raise ParameterError("gain", f"must be finite and non-zero, got {gain}")
    return measured.with_samples(measured.samples / gain)


def save_model(model: LtiModel, path) -> None:
    doc = model.to_dict()
    doc["static_gain"] = static_gain(model)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_model(path) -> LtiModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return LtiModel.from_dict(doc)


def write_dataset_csv(data: SysIdDataset, path) -> None:
    buf = io.StringIO(newline="")
    buf.write(f"# sample_rate_hz: {data.sample_rate_hz!r}\n")
    buf.write(f"# unit: {data.input.unit}\n")
    buf.write("time_s,input,output\n")
    for t, u, y in zip(data.input.times(), data.input.samples, data.output.samples):
        buf.write("%.17g,%.17g,%.17g\n" % (t, u, y))
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def read_dataset_csv(path) -> SysIdDataset:
    meta = {}
    rows = []
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, val = line[1:].partition(":")
                    meta[key.strip()] = val.strip()
                elif not line.startswith("time_s"):
                    rows.append([float(v) for v in line.split(",")])
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not rows or any(len(r) != 3 for r in rows):
        raise ConfigError(f"{path}: expected rows of time_s,input,output")
    arr = np.array(rows)
    if "sample_rate_hz" in meta:
        fs = float(meta["sample_rate_hz"])
    elif arr.shape[0] > 1:
        fs = 1.0 / (arr[1, 0] - arr[0, 0])
    else:
        raise ConfigError(f"{path}: cannot infer the sample rate")
    unit = meta.get("unit", "m")
    t0 = float(arr[0, 0])
    return SysIdDataset(Waveform(fs, arr[:, 1], unit, t0), Waveform(fs, arr[:, 2], unit, t0))


def second_order_lowpass(gain: float, cutoff_hz: float, sample_rate_hz: float, damping: float = 0.7) -> LtiModel:
    """Two-pole discrete lowpass with DC gain ``gain`` (poles at radius exp(-w*damping))."""
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise ParameterError("cutoff_hz", f"must lie in (0, {sample_rate_hz / 2}), got {cutoff_hz}")
    w = 2.0 * np.pi * cutoff_hz / sample_rate_hz
    pole = np.exp(-w * damping) * np.exp(1j * w * damping)
    den = np.poly([pole, np.conj(pole)]).real
    return LtiModel(IIR, [gain * den.sum()], den[1:], sample_rate_hz)


def synthetic_sensor_dataset(
    seed: int = 0,
    gain: float = 0.633,
    cutoff_hz: float = 25.0,
    sample_rate_hz: float = 200.0,
    duration_s: float = 60.0,
    max_freq_hz: float = 5.0,
    line_spacing_hz: float = 0.05,
    snr_db: float = 40.0,
    stroke_m: float = 2.4e-3,
) -> SysIdDataset:
    """Sensor-path identification data: a static gain with dynamics far above the excited band.

    The input is a multisine displacement spanning ``[0, stroke_m]``; the
    output is the input through ``gain`` times a two-pole lowpass, plus white
    noise at ``snr_db`` relative to the output's AC power.
    """
    from .signals import MultisineSpec, generate_multisine

    spec = MultisineSpec(max_freq_hz, line_spacing_hz, stroke_m / 2, sample_rate_hz, duration_s, seed)
    ms = generate_multisine(spec, "m")
    u = ms.with_samples(ms.samples + stroke_m / 2)
    clean = apply_model(second_order_lowpass(gain, cutoff_hz, sample_rate_hz), u).samples
    sigma = np.std(clean) * 10.0 ** (-snr_db / 20.0)
    rng = np.random.default_rng([seed, 1])
    return SysIdDataset(u, u.with_samples(clean + rng.normal(0.0, sigma, clean.size)))
