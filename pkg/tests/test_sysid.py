import json
import math

import numpy as np
import pytest
from scipy.signal import max_len_seq
from hypothesis import given, settings
from hypothesis import strategies as st

from sma_sim.errors import ConfigError, IdentifiabilityError, InstabilityError, ParameterError
from sma_sim.signals import MultisineSpec, Waveform, generate_multisine
from sma_sim.sysid import (
    FIR,
    IIR,
    LtiModel,
    SysIdDataset,
    apply_model,
    compensate_static,
    equation_error_rms,
    excitation_bandwidth,
    fit_fir_ls,
    fit_iir_ls,
    frequency_response,
    load_model,
    read_dataset_csv,
    save_model,
    second_order_lowpass,
    static_gain,
    synthetic_sensor_dataset,
    write_dataset_csv,
)

FS = 200.0


def multisine(max_hz=20.0, spacing=0.5, duration=10.0, seed=2):
    return generate_multisine(MultisineSpec(max_hz, spacing, 1.0, FS, duration, phase_seed=seed))


def white(n=4000, seed=0):
    return Waveform(FS, np.random.default_rng(seed).standard_normal(n), "m")


# poles 0.9 +/- 0.1j, unity DC gain: (z - p)(z - p*) = z^2 - 1.8 z + 0.82, b0 = 1 - 1.8 + 0.82
LOWPASS = LtiModel(IIR, [0.02], [-1.8, 0.82], FS)


def test_identity_system_is_recovered():
    u = multisine()
    m = fit_iir_ls(SysIdDataset(u, u), 4)
    r = frequency_response(m, np.linspace(0.0, 19.0, 60))
    assert np.max(np.abs(r.magnitude_db)) < 20 * math.log10(1 + 1e-6)
    assert np.max(np.abs(r.phase_deg)) < 1e-6 * 180 / math.pi


def test_static_gain_is_recovered():
    u = multisine()
    m = fit_iir_ls(SysIdDataset(u, u.with_samples(0.633 * u.samples)), 4)
    assert static_gain(m) == pytest.approx(0.633, abs=1e-6)


def test_known_lowpass_recovered_by_overparameterized_fit():
    u = multisine()
    data = SysIdDataset(u, apply_model(LOWPASS, u))
    m = fit_iir_ls(data, 10)
    f = np.linspace(0.0, 19.9, 200)
    got, truth = frequency_response(m, f), frequency_response(LOWPASS, f)
    assert np.max(np.abs(got.magnitude_db - truth.magnitude_db)) < 0.1
    assert np.max(np.abs(got.phase_deg - truth.phase_deg)) < 1.0


def test_fir_identity_taps():
    u = white()
    m = fit_fir_ls(SysIdDataset(u, u), 8)
    assert m.kind == FIR and m.a.size == 0
    assert np.allclose(m.b, np.r_[1.0, np.zeros(8)], atol=1e-6)


def test_fir_delayed_gain_taps():
    u = white()
    y = np.r_[np.zeros(3), 0.633 * u.samples[:-3]]
    m = fit_fir_ls(SysIdDataset(u, u.with_samples(y)), 10)
    expected = np.zeros(11)
    expected[3] = 0.633
    assert np.allclose(m.b, expected, atol=1e-9)


def test_fir_and_iir_agree_on_static_gain():
    u = multisine(max_hz=5.0, spacing=0.1, duration=40.0)
    truth = second_order_lowpass(0.633, 30.0, FS)
    data = SysIdDataset(u, apply_model(truth, u))
    gi = static_gain(fit_iir_ls(data, 10))
    gf = static_gain(fit_fir_ls(data, 40))
    assert gi == pytest.approx(gf, rel=0.005)


def test_frequency_response_of_gain_and_delay():
    g = frequency_response(LtiModel(FIR, [0.5], [], FS), [0.0, 10.0, 50.0])
    assert np.allclose(g.magnitude_db, 20 * math.log10(0.5))
    assert np.allclose(g.phase_deg, 0.0)
    f = np.linspace(0.0, 99.0, 100)
    d = frequency_response(LtiModel(FIR, [0.0, 1.0], [], FS), f)
    assert np.allclose(d.magnitude_db, 0.0, atol=1e-12)
    assert np.allclose(d.phase_deg, -360.0 * f / FS, atol=1e-9)


def test_frequency_response_domain():
    m = LtiModel(FIR, [1.0], [], FS)
    with pytest.raises(ParameterError):
        frequency_response(m, [100.0])
    with pytest.raises(ParameterError):
        frequency_response(m, [2.0, 1.0])


def test_sensor_path_low_frequency_magnitude():
    m = fit_iir_ls(synthetic_sensor_dataset(duration_s=40.0), 20)
    r = frequency_response(m, [0.0])
    assert r.magnitude_db[0] == pytest.approx(20 * math.log10(0.633), abs=0.01)
    assert 20 * math.log10(0.633) == pytest.approx(-3.97, abs=0.005)


def test_static_gain_examples():
    assert static_gain(LtiModel(FIR, [0.633], [], FS)) == pytest.approx(0.633)
    assert static_gain(LtiModel(FIR, [0.0, 1.0], [], FS)) == 1.0
    assert static_gain(LOWPASS) == pytest.approx(1.0, rel=1e-12)


def test_unstable_model_cannot_be_constructed():
    with pytest.raises(InstabilityError) as err:
        LtiModel(IIR, [1.0], [-1.5], FS)
    assert err.value.root_radii[0] == pytest.approx(1.5)


def test_unstable_identified_denominator_is_reported():
    # output growing geometrically: the best ARX fit has a root outside the unit circle
    n = 400
    u = np.random.default_rng(0).standard_normal(n)
    y = np.zeros(n)
    for k in range(1, n):
        y[k] = 1.01 * y[k - 1] + u[k]
    with pytest.raises(InstabilityError):
        fit_iir_ls(SysIdDataset(Waveform(FS, u, "m"), Waveform(FS, y, "m")), 1)


def test_zero_excitation_is_not_identifiable():
    z = Waveform(FS, np.zeros(100), "m")
    with pytest.raises(IdentifiabilityError):
        fit_fir_ls(SysIdDataset(z, z), 2)


def test_dataset_too_short_for_order():
    u = white(30)
    with pytest.raises(ParameterError):
        fit_iir_ls(SysIdDataset(u, u), 10)


def test_dataset_invariants():
    with pytest.raises(ParameterError):
        SysIdDataset(white(10), white(11))
    with pytest.raises(ParameterError):
        SysIdDataset(white(10), Waveform(100.0, np.zeros(10), "m"))


def test_excitation_bandwidth_examples():
    assert excitation_bandwidth(multisine(max_hz=5.0, spacing=0.25, duration=8.0), 0.1) == pytest.approx(5.0)
    t = np.arange(2000) / 1000.0
    assert excitation_bandwidth(Waveform(1000.0, np.cos(2 * np.pi * t), "m"), 0.1) == pytest.approx(1.0)
    # maximum-length sequence, four periods: flat line spectrum
    prbs = np.tile(2.0 * max_len_seq(10)[0] - 1.0, 4)
    assert excitation_bandwidth(Waveform(1000.0, prbs, "m"), 0.1) >= 100.0
    with pytest.raises(ParameterError):
        excitation_bandwidth(Waveform(1000.0, np.ones(100), "m"), 0.1)
    with pytest.raises(ParameterError):
        excitation_bandwidth(Waveform(1000.0, prbs, "m"), 1.5)


def test_apply_model_examples():
    x = white(50)
    assert np.allclose(apply_model(LtiModel(FIR, [1.0], [], FS), x).samples, x.samples)
    assert np.allclose(apply_model(LtiModel(FIR, [0.633], [], FS), x).samples, 0.633 * x.samples)
    d = apply_model(LtiModel(FIR, [0.0, 0.0, 1.0], [], FS), x).samples
    assert np.array_equal(d[2:], x.samples[:-2]) and np.all(d[:2] == 0)
    with pytest.raises(ParameterError):
        apply_model(LOWPASS, Waveform(100.0, [1.0], "m"))


def test_compensate_static_round_trip():
    x = multisine()
    distorted = apply_model(LtiModel(FIR, [0.633], [], FS), x)
    assert np.allclose(compensate_static(distorted, 0.633).samples, x.samples, atol=1e-9, rtol=0)
    assert np.array_equal(compensate_static(x, 1.0).samples, x.samples)
    with pytest.raises(ParameterError):
        compensate_static(x, 0.0)


stable_poles = st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=4)


@settings(max_examples=40, deadline=None)
@given(poles=stable_poles, b=st.lists(st.floats(-2.0, 2.0), min_size=1, max_size=4))
def test_static_gain_matches_step_response(poles, b):
    den = np.poly(poles)
    if abs(np.sum(den)) < 1e-3:
        return
    m = LtiModel(IIR, b, den[1:], FS)
    step = apply_model(m, Waveform(FS, np.ones(6000), "m")).samples
    assert step[-1] == pytest.approx(static_gain(m), rel=1e-6, abs=1e-6)


@settings(max_examples=15, deadline=None)
@given(poles=st.lists(st.floats(-0.9, 0.9), min_size=1, max_size=3), gain=st.floats(0.1, 3.0), seed=st.integers(0, 100))
def test_noiseless_data_recovers_response(poles, gain, seed):
    den = np.poly(poles)
    truth = LtiModel(IIR, [gain * np.sum(den)], den[1:], FS)
    u = multisine(seed=seed)
    m = fit_iir_ls(SysIdDataset(u, apply_model(truth, u)), len(poles) + 2)
    f = np.linspace(0.0, 19.9, 80)
    got, ref = frequency_response(m, f), frequency_response(truth, f)
    assert np.max(np.abs(got.magnitude_db - ref.magnitude_db)) < 0.1
    assert np.max(np.abs(got.phase_deg - ref.phase_deg)) < 1.0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_static_gain_robust_to_40db_noise(seed):
    data = synthetic_sensor_dataset(seed=seed, duration_s=40.0)
    assert static_gain(fit_iir_ls(data, 20)) == pytest.approx(0.633, rel=0.01)


def test_more_data_never_increases_noiseless_residual():
    u_long = multisine(duration=20.0)
    y_long = apply_model(LOWPASS, u_long)
    n = len(u_long) // 2
    short = SysIdDataset(Waveform(FS, u_long.samples[:n], "m"), Waveform(FS, y_long.samples[:n], "m"))
    long = SysIdDataset(u_long, y_long)
    r_short = equation_error_rms(fit_iir_ls(short, 2), short)
    r_long = equation_error_rms(fit_iir_ls(long, 2), long)
    assert r_long <= r_short + 1e-15


def test_model_json_round_trip(tmp_path):
    m = second_order_lowpass(0.633, 25.0, FS)
    save_model(m, tmp_path / "m.json")
    doc = json.loads((tmp_path / "m.json").read_text())
    assert set(doc) == {"kind", "fs", "b", "a", "static_gain"}
    back = load_model(tmp_path / "m.json")
    assert back.kind == m.kind and np.array_equal(back.b, m.b) and np.array_equal(back.a, m.a)
    (tmp_path / "bad.json").write_text("{}")
    with pytest.raises(ConfigError):
        load_model(tmp_path / "bad.json")


def test_dataset_csv_round_trip(tmp_path):
    data = synthetic_sensor_dataset(duration_s=20.0)
    write_dataset_csv(data, tmp_path / "d.csv")
    back = read_dataset_csv(tmp_path / "d.csv")
    assert back.sample_rate_hz == data.sample_rate_hz
    assert back.input.samples.tobytes() == data.input.samples.tobytes()
    assert back.output.samples.tobytes() == data.output.samples.tobytes()


def test_bode_csv_columns():
    text = frequency_response(LOWPASS, [0.0, 1.0], valid_upto_hz=5.0).to_csv()
    lines = text.splitlines()
    assert lines[0] == "# valid_upto_hz: 5.0"
    assert lines[1] == "f_hz,mag_db,phase_deg"
    assert len(lines) == 4
