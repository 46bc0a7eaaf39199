import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppgbench import (
    PpgWaveform, SynthConfig, add_noise, load_waveform, resample, save_waveform, synthesize_ppg,
)
from ppgbench.exceptions import ConfigurationError, DegenerateSignalError, ParseError

from conftest import fft_peak_hz, local_maxima


def test_sample_count_and_range():
    wf = synthesize_ppg(SynthConfig(heart_rate_bpm=72, duration_s=12.34, sample_rate_hz=100))
    assert len(wf) == round(12.34 * 100)
    assert wf.samples.min() == 0.0 and wf.samples.max() == 1.0


def test_fundamental_60bpm():
    wf = synthesize_ppg(SynthConfig(heart_rate_bpm=60, duration_s=60, sample_rate_hz=100))
    assert abs(fft_peak_hz(wf.samples, 100) - 1.0) <= 0.02


@pytest.mark.parametrize("hr", [0, 29.9, 241])
def test_out_of_range_heart_rate(hr):
    with pytest.raises(ConfigurationError):
        SynthConfig(heart_rate_bpm=hr, duration_s=10, sample_rate_hz=100)


@pytest.mark.parametrize("kw", [{"duration_s": 0}, {"sample_rate_hz": -1}, {"sample_rate_hz": 3.0}])
def test_invalid_config(kw):
    with pytest.raises(ConfigurationError):
        SynthConfig(**{"heart_rate_bpm": 60, "duration_s": 10, "sample_rate_hz": 100, **kw})


def test_constant_interbeat_intervals():
    wf = synthesize_ppg(SynthConfig(heart_rate_bpm=60, duration_s=30, sample_rate_hz=100, rsa_depth=0))
    peaks = local_maxima(wf.samples, min_sep=50)
    ibi = np.diff(peaks) / 100.0
    assert len(peaks) >= 28
    assert np.all(np.abs(ibi - 1.0) <= 0.01)


@given(st.floats(30, 240), st.integers(0, 2**32))
@settings(max_examples=25, deadline=None)
def test_spectral_placement(hr, seed):
    fs, dur = 100.0, 30.0
    wf = synthesize_ppg(SynthConfig(heart_rate_bpm=hr, duration_s=dur, sample_rate_hz=fs, seed=seed))
    assert abs(fft_peak_hz(wf.samples, fs) - hr / 60) <= 1.0 / dur + 1e-9


def test_determinism():
    cfg = SynthConfig(heart_rate_bpm=90, duration_s=20, rsa_depth=0.1, drift_freq_hz=0.1,
                      drift_amplitude=0.3, motion_burst_rate_per_min=6, motion_burst_amplitude=0.5,
                      powerline_freq_hz=50, powerline_amplitude=0.05, seed=1234)
    a, b = synthesize_ppg(cfg), synthesize_ppg(cfg)
    assert a.samples.tobytes() == b.samples.tobytes()


def _ibi_std(rsa_depth):
    wf = synthesize_ppg(SynthConfig(heart_rate_bpm=75, duration_s=60, sample_rate_hz=200,
                                    rsa_depth=rsa_depth, rsa_freq_hz=0.25, seed=3))
    peaks = local_maxima(wf.samples, min_sep=int(200 * 60 / 75 * 0.6))
    return np.std(np.diff(peaks))


def test_rsa_increases_ibi_spread():
    assert _ibi_std(0.1) > _ibi_std(0.0)


def test_motion_bursts_change_signal():
    base = SynthConfig(heart_rate_bpm=75, duration_s=30, seed=5)
    moved = SynthConfig(heart_rate_bpm=75, duration_s=30, seed=5,
                        motion_burst_rate_per_min=10, motion_burst_amplitude=2.0)
    assert not np.allclose(synthesize_ppg(base).samples, synthesize_ppg(moved).samples)


# -- add_noise ---------------------------------------------------------------

def _sine(n=20000, fs=100.0, f=1.0):
    t = np.arange(n) / fs
    return PpgWaveform(np.sqrt(2) * np.sin(2 * np.pi * f * t), fs)


def test_noise_vanishes_at_high_snr():
    wf = synthesize_ppg(SynthConfig(heart_rate_bpm=80, duration_s=10))
    out = add_noise(wf, 200.0, seed=1)
    np.testing.assert_allclose(out.samples, wf.samples, rtol=1e-6, atol=1e-6)


def test_unit_variance_sine_at_0db():
    wf = _sine()
    assert math.isclose(np.var(wf.samples), 1.0, rel_tol=1e-3)
    noise = add_noise(wf, 0.0, seed=9).samples - wf.samples
    assert abs(np.var(noise, ddof=1) - 1.0) <= 0.05


def test_constant_waveform_rejected():
    with pytest.raises(DegenerateSignalError):
        add_noise(PpgWaveform(np.full(100, 3.0), 100), 10.0)


@given(st.floats(-20, 60), st.integers(0, 2**31))
@settings(max_examples=25, deadline=None)
def test_measured_snr(snr_db, seed):
    wf = _sine(n=10000)
    out = add_noise(wf, snr_db, seed=seed)
    noise = out.samples - wf.samples
    measured = 10 * np.log10(np.var(wf.samples) / np.mean(noise**2))
    assert abs(measured - snr_db) <= 0.1


def test_add_noise_deterministic():
    wf = _sine(n=1000)
    assert np.array_equal(add_noise(wf, 5, seed=4).samples, add_noise(wf, 5, seed=4).samples)
    assert not np.array_equal(add_noise(wf, 5, seed=4).samples, add_noise(wf, 5, seed=5).samples)


# -- resample ----------------------------------------------------------------

def test_resample_identity():
    wf = synthesize_ppg(SynthConfig(heart_rate_bpm=80, duration_s=5))
    assert np.array_equal(resample(wf, 100.0).samples, wf.samples)


def test_resample_preserves_tone():
    wf = _sine(n=3000, fs=100, f=1.0)
    out = resample(wf, 30.0)
    assert out.sample_rate_hz == 30.0
    assert abs(fft_peak_hz(out.samples, 30.0) - 1.0) <= 0.05
    assert abs(out.duration_s - wf.duration_s) <= 1 / 30


def test_resample_suppresses_alias():
    # 20 Hz at 100 Hz would alias to 10 Hz at 30 Hz without the low-pass.
    t = np.arange(3000) / 100
    wf = PpgWaveform(np.sin(2 * np.pi * 1.0 * t) + np.sin(2 * np.pi * 20.0 * t), 100)
    y = resample(wf, 30.0).samples
    spec = np.abs(np.fft.rfft(y - y.mean()))
    freqs = np.fft.rfftfreq(y.size, 1 / 30)
    alias = spec[np.argmin(np.abs(freqs - 10.0))]
    tone = spec[np.argmin(np.abs(freqs - 1.0))]
    assert alias < 0.05 * tone


@pytest.mark.parametrize("rate", [0, -30, float("nan")])
def test_resample_bad_rate(rate):
    with pytest.raises(ConfigurationError):
        resample(_sine(n=100), rate)


# -- CSV ---------------------------------------------------------------------

def test_load_three_rows(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("t_s,value\n0.00,0.1\n0.01,0.2\n0.02,0.3\n")
    wf = load_waveform(p, "csv")
    assert len(wf) == 3
    assert wf.sample_rate_hz == pytest.approx(100.0, rel=1e-12)
    assert wf.samples.tolist() == [0.1, 0.2, 0.3]


@pytest.mark.parametrize("body", [
    "t_s,value\n0.00,0.1\n0.02,0.2\n0.01,0.3\n",
    "t_s,value\n0.00,0.1\n0.01\n0.02,0.3\n",
    "t_s,value\n0.00,0.1\n0.01,abc\n",
    "time,value\n0.00,0.1\n0.01,0.2\n",
    "t_s,value\n0.00,0.1\n0.01,0.2\n0.03,0.3\n",
])
def test_load_rejects_malformed(tmp_path, body):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(ParseError):
        load_waveform(p)


def test_round_trip(tmp_path):
    wf = synthesize_ppg(SynthConfig(heart_rate_bpm=95, duration_s=8, seed=11))
    back = load_waveform(save_waveform(wf, tmp_path / "w.csv"))
    np.testing.assert_allclose(back.samples, wf.samples, atol=1e-9, rtol=0)
    assert back.sample_rate_hz == pytest.approx(wf.sample_rate_hz, rel=1e-9)
