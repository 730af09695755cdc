import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sma_sim.errors import EmptyWindowError, ParameterError, UnitMismatchError
from sma_sim.signals import (
    MultisineSpec,
    PwmSpec,
    Waveform,
    generate_multisine,
    generate_pwm,
    read_waveform_csv,
    steady_state_window,
    write_waveform_csv,
)


def test_zero_duty_is_all_zero():
    w = generate_pwm(PwmSpec(1.0, 0.0, 2.7))
    assert w.unit == "V"
    assert np.all(w.samples == 0.0)


def test_full_duty_is_constant():
    w = generate_pwm(PwmSpec(1.0, 1.0, 2.7))
    assert np.all(w.samples == 2.7)


def test_seven_percent_duty_by_enumeration():
    w = generate_pwm(PwmSpec(1.0, 0.07, 2.7, sample_rate_hz=1000.0, duration_s=1.0))
    assert len(w) == 1000
    # oracle: count k with frac(k * f / fs) < DC using exact integer arithmetic
    on = [k for k in range(1000) if (k % 1000) * 100 < 7 * 1000]
    assert on == list(range(70))
    assert np.all(w.samples[:70] == 2.7)
    assert np.all(w.samples[70:] == 0.0)


@pytest.mark.parametrize(
    "kwargs, field",
    [
        ({"frequency_hz": 0.0}, "frequency_hz"),
        ({"duty_fraction": 1.2}, "duty_fraction"),
        ({"duty_fraction": -0.1}, "duty_fraction"),
        ({"sample_rate_hz": 99.0}, "sample_rate_hz"),
        ({"duration_s": 0.0}, "duration_s"),
    ],
)
def test_pwm_spec_names_violated_field(kwargs, field):
    base = {"frequency_hz": 1.0, "duty_fraction": 0.5, "amplitude_volts": 1.0}
    base.update(kwargs)
    with pytest.raises(ParameterError) as err:
        PwmSpec(**base)
    assert err.value.field == field


@settings(max_examples=60, deadline=None)
@given(
    f=st.integers(1, 5),
    duty=st.floats(0.0, 1.0),
    amp=st.floats(0.1, 20.0),
    duration=st.floats(0.5, 4.0),
)
def test_pwm_on_fraction_and_mean_within_quantization(f, duty, amp, duration):
    spec = PwmSpec(float(f), duty, amp, sample_rate_hz=1000.0, duration_s=duration)
    w = generate_pwm(spec)
    n = len(w)
    on_fraction = np.count_nonzero(w.samples) / n
    # whole periods quantize to 1/fs per period; a partial last period adds at most one period's share
    bound = 1.0 / (spec.sample_rate_hz * spec.duration_s) * (f * duration + 1) + 1.0 / (f * duration)
    assert abs(on_fraction - duty) <= bound
    assert abs(np.mean(w.samples) - amp * duty) <= amp * bound


def test_pwm_whole_periods_quantization_bound():
    spec = PwmSpec(5.0, 0.07, 1.0, 1000.0, 32.0)
    w = generate_pwm(spec)
    frac = np.count_nonzero(w.samples) / len(w)
    # 200 samples per period: 14 ON samples, exact
    assert frac == pytest.approx(0.07, abs=1.0 / (spec.sample_rate_hz / spec.frequency_hz))


def test_single_line_multisine_is_unit_cosine():
    spec = MultisineSpec(1.0, 1.0, 1.0, 1000.0, 4.0, phase_seed=3)
    w = generate_multisine(spec)
    assert np.max(np.abs(w.samples)) == pytest.approx(1.0, abs=1e-15)
    t = w.times()
    ph = np.random.default_rng(3).uniform(0, 2 * np.pi, 1)[0]
    assert np.allclose(w.samples, np.cos(2 * np.pi * t + ph) / np.max(np.abs(np.cos(2 * np.pi * t + ph))))


def test_multisine_is_deterministic():
    spec = MultisineSpec(5.0, 0.25, 1.0, 1000.0, 8.0, phase_seed=7)
    a, b = generate_multisine(spec), generate_multisine(spec)
    assert a.samples.tobytes() == b.samples.tobytes()


def test_multisine_spectrum_support():
    spec = MultisineSpec(5.0, 0.25, 1.0, 1000.0, 8.0, phase_seed=1)
    x = generate_multisine(spec).samples
    mag = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(x.size, 1.0 / spec.sample_rate_hz)
    lines = spec.lines_hz()
    peak = mag.max()
    on = np.isin(np.round(freqs, 9), np.round(lines, 9))
    assert on.sum() == 20
    assert np.all(mag[on] > 0.1 * peak)
    assert np.all(mag[freqs > 5.0 + 1e-9] < 0.01 * peak)


def test_multisine_without_lines_is_rejected():
    with pytest.raises(ParameterError):
        MultisineSpec(0.5, 1.0)


def test_window_default_protocol():
    w = generate_pwm(PwmSpec(1.0, 0.07, 2.7, duration_s=32.0))
    win = steady_state_window(w, 2.0)
    assert win.duration_s == pytest.approx(30.0)
    assert win.t0_s == pytest.approx(2.0)
    assert win.unit == "V"


def test_window_zero_skip_is_identity():
    w = Waveform(100.0, np.arange(10.0), "m")
    assert steady_state_window(w, 0.0) == w


def test_window_sample_count():
    w = Waveform(100.0, np.zeros(1000), "W")
    assert len(steady_state_window(w, 4.0)) == 600


def test_window_skip_beyond_duration():
    w = Waveform(100.0, np.zeros(100), "W")
    with pytest.raises(EmptyWindowError):
        steady_state_window(w, 1.0)


@settings(max_examples=60, deadline=None)
@given(a=st.integers(0, 400), b=st.integers(0, 400))
def test_window_composes_additively(a, b):
    w = Waveform(100.0, np.arange(1000.0), "m", t0_s=0.5)
    sa, sb = a / 100.0, b / 100.0
    once = steady_state_window(w, sa + sb)
    twice = steady_state_window(steady_state_window(w, sa), sb)
    assert len(once) == len(twice)
    assert np.array_equal(once.samples, twice.samples)
    assert once.t0_s == pytest.approx(twice.t0_s, abs=1e-12)


def test_waveform_invariants():
    with pytest.raises(ParameterError):
        Waveform(100.0, [], "V")
    with pytest.raises(ParameterError):
        Waveform(0.0, [1.0], "V")
    with pytest.raises(ParameterError):
        Waveform(100.0, [1.0], "K")
    with pytest.raises(UnitMismatchError):
        Waveform(100.0, [1.0], "V").require_unit("A")


def test_waveform_samples_are_read_only():
    w = Waveform(10.0, [1.0, 2.0], "V")
    with pytest.raises(ValueError):
        w.samples[0] = 3.0


@settings(max_examples=25, deadline=None)
@given(
    values=st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=30),
    fs=st.sampled_from([1.0, 100.0, 1000.0, 333.0]),
    unit=st.sampled_from(["V", "A", "W", "°C", "m"]),
)
def test_waveform_csv_round_trip_is_bit_exact(tmp_path_factory, values, fs, unit):
    path = tmp_path_factory.mktemp("wf") / "w.csv"
    w = Waveform(fs, values, unit, t0_s=0.25)
    write_waveform_csv(w, path)
    back = read_waveform_csv(path)
    assert back.unit == unit
    assert back.sample_rate_hz == fs
    assert back.t0_s == 0.25
    assert back.samples.tobytes() == w.samples.tobytes()
    assert math.isclose(back.duration_s, w.duration_s)
