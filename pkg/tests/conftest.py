import numpy as np
import pytest

from ppgbench import RecoveredSignal


def fft_peak_hz(x, fs):
    """Oracle: frequency of the largest raw-FFT magnitude bin in (0, fs/2)."""
    x = np.asarray(x, dtype=float) - np.mean(x)
    mag = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(x.size, 1.0 / fs)
    mag[0] = 0.0
    if x.size % 2 == 0:
        mag[-1] = 0.0
    return freqs[int(np.argmax(mag))]


def local_maxima(x, min_sep):
    """Oracle: indices of strict local maxima at least ``min_sep`` apart, largest first."""
    x = np.asarray(x, dtype=float)
    cand = [i for i in range(1, x.size - 1) if x[i] > x[i - 1] and x[i] >= x[i + 1]]
    cand.sort(key=lambda i: -x[i])
    chosen = []
    for i in cand:
        if all(abs(i - j) >= min_sep for j in chosen):
            chosen.append(i)
    return sorted(chosen)


def green_signal(values, fps, t0=0.0):
    values = np.asarray(values, dtype=float)
    t = t0 + np.arange(values.size) / fps
    means = np.column_stack([np.full_like(values, 128.0), values, np.full_like(values, 128.0)])
    return RecoveredSignal(t, means, fps)


@pytest.fixture
def fft_peak():
    return fft_peak_hz


_DECODED = {}


def decoded_standard(hr, duration_s=20.0, profile=1, seed=0):
    """Decoded 320x240 @ 30 fps video of a standard-profile synthetic case (cached)."""
    from ppgbench import FrameSpec, SynthConfig, decode_video, encode_video, map_ppg_to_rgb
    from ppgbench import standard_profiles, synthesize_ppg

    key = (hr, duration_s, profile, seed)
    if key not in _DECODED:
        wf = synthesize_ppg(SynthConfig(heart_rate_bpm=hr, duration_s=duration_s, seed=seed))
        mapped = map_ppg_to_rgb(wf, standard_profiles()[profile], 30.0)
        _DECODED[key] = (wf, decode_video(encode_video(mapped, FrameSpec(), 2.0, clip_seed=seed)))
    return _DECODED[key]


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[n])
