"""scikit-learn compatible wrappers around the encode / acquire / estimate chain.

The wrappers are stateless apart from validated hyper-parameters, so they
compose in a :class:`sklearn.pipeline.Pipeline`::

    pipe = make_pipeline(PpgVideoEncoder(), VirtualDUT(), HeartRateEstimator())
    bpm = pipe.fit(waveforms).predict(waveforms)

``X`` is a sequence of domain objects (waveforms, clips or recovered
signals). :class:`HeartRateEstimator` additionally accepts a 2-D array whose
rows are uniformly sampled single-channel traces at ``fps``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._seeding import derive_seed
from .dut import DegradationConfig, RecoveredSignal, apply_degradation, decode_video
from .hr import EstimatorConfig, estimate_hr
from .metrics import PairedMeasurements, mape
from .video import ChannelProfile, FrameSpec, VideoClip, encode_video, map_ppg_to_rgb, standard_profiles
from .waveform import PpgWaveform


def _check_sequence(X, kind, name):
    if isinstance(X, kind):
        X = [X]
    X = list(X)
    if not X:
        raise ValueError(f"{name} received an empty input")
    bad = [type(x).__name__ for x in X if not isinstance(x, kind)]
    if bad:
        raise TypeError(f"{name} expects {kind.__name__} items, got {bad[0]}")
    return X


class PpgVideoEncoder(TransformerMixin, BaseEstimator):
    """Turn :class:`PpgWaveform` objects into dithered :class:`VideoClip` objects.

    Parameters
    ----------
    profile : ChannelProfile or None
        Signal-strength profile. ``None`` uses the standard "medium" profile.
    width, height, fps : frame geometry and rate.
    dither_sigma : float
        Standard deviation of the per-pixel Gaussian dither.
    seed : int
        Clip seeds are derived from this and the position of each waveform.
    """

    def __init__(self, profile=None, width=320, height=240, fps=30.0, dither_sigma=2.0, seed=0):
        self.profile = profile
        self.width = width
        self.height = height
        self.fps = fps
        self.dither_sigma = dither_sigma
        self.seed = seed

    def fit(self, X=None, y=None):
        profile = self.profile or standard_profiles()[1]
        if not isinstance(profile, ChannelProfile):
            raise TypeError("profile must be a ChannelProfile")
        self.profile_ = ChannelProfile(profile.mean, profile.pulse_amplitude, profile.name,
                                       self.dither_sigma)
        self.spec_ = FrameSpec(self.width, self.height, self.fps)
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = _check_sequence(X, PpgWaveform, type(self).__name__)
        clips = []
        for i, wf in enumerate(X):
            mapped = map_ppg_to_rgb(wf, self.profile_, self.spec_.fps)
            clips.append(encode_video(mapped, self.spec_, self.dither_sigma,
                                      derive_seed(int(self.seed), "encoder", i)))
        return clips


class VirtualDUT(TransformerMixin, BaseEstimator):
    """Decode clips to per-channel spatial means and apply acquisition degradations."""

    def __init__(self, drop_mode="none", drop_p=0.0, base_p=0.0, slope_per_bpm=0.0,
                 jitter_std_ms=0.0, sensor_noise_std=0.0, heart_rate_bpm=None, seed=0):
        self.drop_mode = drop_mode
        self.drop_p = drop_p
        self.base_p = base_p
        self.slope_per_bpm = slope_per_bpm
        self.jitter_std_ms = jitter_std_ms
        self.sensor_noise_std = sensor_noise_std
        self.heart_rate_bpm = heart_rate_bpm
        self.seed = seed

    def fit(self, X=None, y=None):
        self.config_ = DegradationConfig(self.drop_mode, self.drop_p, self.base_p, self.slope_per_bpm,
                                         self.jitter_std_ms, self.sensor_noise_std, self.seed)
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        X = _check_sequence(X, VideoClip, type(self).__name__)
        out = []
        for i, clip in enumerate(X):
            cfg = DegradationConfig(**{**self.config_.to_dict(),
                                       "seed": derive_seed(int(self.seed), "dut", i)})
            out.append(apply_degradation(decode_video(clip), cfg, self.heart_rate_bpm))
        return out


class HeartRateEstimator(BaseEstimator):
    """Predict heart rate (bpm) from recovered signals.

    ``score`` returns the negative MAPE so that greater is better, as the
    sklearn model-selection tools expect.
    """

    def __init__(self, method="spectral", band_bpm=(30.0, 240.0), channel="G",
                 resample_fps=None, use_timestamps=True, fps=30.0):
        self.method = method
        self.band_bpm = band_bpm
        self.channel = channel
        self.resample_fps = resample_fps
        self.use_timestamps = use_timestamps
        self.fps = fps

    def fit(self, X=None, y=None):
        self.config_ = EstimatorConfig(self.method, tuple(self.band_bpm), self.channel,
                                       self.resample_fps, self.use_timestamps)
        return self

    def _as_signals(self, X):
        if isinstance(X, RecoveredSignal):
            return [X]
        if isinstance(X, (list, tuple)) and X and isinstance(X[0], RecoveredSignal):
            return _check_sequence(X, RecoveredSignal, type(self).__name__)
        arr = check_array(X, ensure_2d=True, dtype=float)
        t = np.arange(arr.shape[1]) / self.fps
        # A bare trace is placed on the configured channel.
        signals = []
        for row in arr:
            means = np.zeros((row.size, 3))
            means[:, "RGB".index(self.config_.channel.upper())] = row
            signals.append(RecoveredSignal(t, means, self.fps))
        return signals

    def predict(self, X):
        check_is_fitted(self, "config_")
        return np.array([estimate_hr(s, self.config_).bpm for s in self._as_signals(X)])

    def score(self, X, y):
        pred = self.predict(X)
        return -mape(PairedMeasurements(np.asarray(y, dtype=float), pred)).mape_pct
