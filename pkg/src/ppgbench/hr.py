"""Reference heart-rate estimators operating on recovered signals."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps
from scipy.ndimage import uniform_filter1d

from ._spectral import parabolic_offset, spectral_peak, uniform_grid
from .dut import RecoveredSignal, channel_index
from .exceptions import ConfigurationError, InsufficientDataError

METHODS = ("spectral", "peak")
MIN_BEATS = 4
IBI_AGREEMENT = 0.10


@dataclass(frozen=True)
class EstimatorConfig:
    """How to turn a recovered signal into a heart rate.

    ``resample_fps=None`` means the signal's nominal fps. With
    ``use_timestamps=False`` the estimator ignores the recorded timestamps and
    assumes every sample arrived exactly one nominal frame interval after the
    previous one, which is how a frame-rate-naive app reacts to drops.
    """

    method: str = "spectral"
    band_bpm: tuple = (30.0, 240.0)
    channel: str = "G"
    resample_fps: float | None = None
    use_timestamps: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        low, high = (float(v) for v in self.band_bpm)
        if not (30.0 <= low < high <= 300.0):
            raise ConfigurationError(f"band_bpm must satisfy 30 <= low < high <= 300, got {self.band_bpm}")
        object.__setattr__(self, "band_bpm", (low, high))
        channel_index(self.channel)
        if self.resample_fps is not None and not self.resample_fps > 0:
            raise ConfigurationError("resample_fps must be > 0")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["band_bpm"] = list(self.band_bpm)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EstimatorConfig":
        d = dict(d)
        if "band_bpm" in d:
            d["band_bpm"] = tuple(d["band_bpm"])
        return cls(**d)


@dataclass(frozen=True)
class HrEstimate:
    bpm: float
    method: str
    quality: float


def _uniform_trace(signal: RecoveredSignal, cfg: EstimatorConfig):
    fs = cfg.resample_fps or signal.nominal_fps
    x = signal.channel(cfg.channel)
    if cfg.use_timestamps:
        t = signal.timestamps_s
    else:
        t = np.arange(len(signal)) / signal.nominal_fps
    if t.size < 2:
        raise InsufficientDataError("need at least two samples")
    min_duration = MIN_BEATS * 60.0 / cfg.band_bpm[0]
    if t[-1] - t[0] < min_duration - 1.0 / fs:
        raise InsufficientDataError(
            f"signal spans {t[-1] - t[0]:.2f} s; need {min_duration:g} s "
            f"({MIN_BEATS} beats at {cfg.band_bpm[0]:g} bpm)")
    _, x = uniform_grid(t, x, fs)
    return x, fs


def estimate_hr_spectral(signal: RecoveredSignal, cfg: EstimatorConfig | None = None) -> HrEstimate:
    """Largest in-band peak of the Hann-windowed spectrum, parabolically refined."""
    cfg = cfg or EstimatorConfig()
    x, fs = _uniform_trace(signal, cfg)
    low, high = cfg.band_bpm
    freq, quality = spectral_peak(x, fs, low / 60.0, high / 60.0)
    return HrEstimate(60.0 * freq, "spectral", quality)


def _refine_peak(y: np.ndarray, k: int) -> float:
    if 0 < k < y.size - 1:
        return k + parabolic_offset(y[k - 1], y[k], y[k + 1])
    return float(k)


def detect_beats(signal: RecoveredSignal, cfg: EstimatorConfig | None = None):
    """Return ``(beat_times_s, fs)`` of systolic peaks found in the chosen channel."""
    cfg = cfg or EstimatorConfig(method="peak")
    x, fs = _uniform_trace(signal, cfg)
    low, high = cfg.band_bpm

    # Detrend with a moving average one slowest-beat long, then low-pass at the band top.
    win = max(1, int(round(fs * 60.0 / low)))
    x = x - uniform_filter1d(x, win, mode="reflect")
    cutoff = high / 60.0
    if cutoff < 0.5 * fs * 0.95 and x.size > 15:
        b, a = sps.butter(2, cutoff, fs=fs)
        x = sps.filtfilt(b, a, x, padlen=min(3 * max(len(a), len(b)), x.size - 1))

    # Systolic peaks are the darkest frames, i.e. minima in pixel space.
    x = -x
    q75, q25 = np.percentile(x, [75, 25])
    min_distance = max(1, int(math.floor(fs * 60.0 / high)))
    peaks, _ = sps.find_peaks(x, distance=min_distance, prominence=0.3 * (q75 - q25))
    return np.array([_refine_peak(x, int(k)) for k in peaks]) / fs, fs


def estimate_hr_peaks(signal: RecoveredSignal, cfg: EstimatorConfig | None = None) -> HrEstimate:
    """60 / median inter-beat interval of detected systolic peaks."""
    cfg = cfg or EstimatorConfig(method="peak")
    beats, _ = detect_beats(signal, cfg)
    if beats.size < 3:
        raise InsufficientDataError(f"only {beats.size} beats detected; need 3")
    ibi = np.diff(beats)
    median = float(np.median(ibi))
    low, high = cfg.band_bpm
    bpm = float(np.clip(60.0 / median, low, high))
    quality = float(np.mean(np.abs(ibi - median) <= IBI_AGREEMENT * median))
    return HrEstimate(bpm, "peak", quality)


def estimate_hr(signal: RecoveredSignal, cfg: EstimatorConfig | None = None) -> HrEstimate:
    cfg = cfg or EstimatorConfig()
    if cfg.method == "spectral":
        return estimate_hr_spectral(signal, cfg)
    return estimate_hr_peaks(signal, cfg)
