"""Accuracy and diagnostic metrics for bench runs."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._spectral import spectral_peak, uniform_grid
from .dut import RecoveredSignal
from .exceptions import (
    DegenerateInputError, InputError, InsufficientDataError, ParseError,
)
from .waveform import PpgWaveform

ANSI_CTA_MAPE_LIMIT_PCT = 10.0
BOOTSTRAP_RESAMPLES = 10_000
DROP_GAP_FACTOR = 1.5
MIN_CLASSIFY_MEASUREMENTS = 10


@dataclass(frozen=True, eq=False)
class PairedMeasurements:
    expected_bpm: np.ndarray
    measured_bpm: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.expected_bpm, dtype=float).ravel()
        m = np.asarray(self.measured_bpm, dtype=float).ravel()
        if e.size == 0 or e.size != m.size:
            raise InputError(f"need equal, non-zero lengths; got {e.size} and {m.size}")
        if np.any(e <= 0) or np.any(m <= 0):
            raise InputError("heart rates must be positive")
        object.__setattr__(self, "expected_bpm", e)
        object.__setattr__(self, "measured_bpm", m)


@dataclass(frozen=True, eq=False)
class AccelTrace:
    timestamps_s: np.ndarray
    magnitude: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.timestamps_s, dtype=float)
        m = np.asarray(self.magnitude, dtype=float)
        if t.ndim != 1 or t.size < 2 or m.shape != t.shape:
            raise InputError("accelerometer trace needs >= 2 points and equal lengths")
        if np.any(np.diff(t) <= 0):
            raise InputError("accelerometer timestamps must be increasing")
        if np.any(m < 0):
            raise InputError("acceleration magnitude must be non-negative")
        object.__setattr__(self, "timestamps_s", t)
        object.__setattr__(self, "magnitude", m)


@dataclass(frozen=True)
class MapeResult:
    mape_pct: float
    ape_pct: np.ndarray


def mape(pairs: PairedMeasurements) -> MapeResult:
    ape = 100.0 * np.abs(pairs.measured_bpm - pairs.expected_bpm) / pairs.expected_bpm
    return MapeResult(float(ape.mean()), ape)


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise InputError("pearson needs two 1-D arrays of equal length >= 2")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = np.dot(dx, dx), np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        raise DegenerateInputError("correlation is undefined for a constant input")
    # sqrt of the product keeps pearson(x, x) at exactly 1.0
    return float(np.clip(np.dot(dx, dy) / np.sqrt(sxx * syy), -1.0, 1.0))


@dataclass(frozen=True)
class XcorrResult:
    r: float
    lag_s: float


def xcorr_aligned(reference: PpgWaveform, recovered: RecoveredSignal, max_lag_s: float = 1.0,
                  channel="G") -> XcorrResult:
    """Peak normalized cross-correlation between a waveform and a recovered channel.

    The recovered channel is linearly interpolated onto the reference sample
    times inside the common time span. The reference is negated so it has the
    pixel-space orientation of the encoder output. Both series are z-scored
    over the full span and each lag is normalized by the full length, so a
    shift of a periodic signal by whole periods scores below lag 0. A positive
    ``lag_s`` means the recovered signal lags the reference.
    """
    if max_lag_s < 0:
        raise InputError("max_lag_s must be non-negative")
    fs = reference.sample_rate_hz
    t_ref = reference.times
    t_rec = recovered.timestamps_s
    start, stop = max(t_ref[0], t_rec[0]), min(t_ref[-1], t_rec[-1])
    if stop <= start or stop - start < 2 * max_lag_s:
        raise InputError(
            f"overlap of {max(0.0, stop - start):.3f} s is shorter than 2 x max_lag_s")
    idx = np.flatnonzero((t_ref >= start) & (t_ref <= stop))
    ref = -reference.samples[idx]
    rec = np.interp(t_ref[idx], t_rec, recovered.channel(channel))
    if ref.size < 2 or np.ptp(ref) == 0 or np.ptp(rec) == 0:
        raise DegenerateInputError("cross-correlation is undefined for a constant input")
    ref = (ref - ref.mean()) / ref.std()
    rec = (rec - rec.mean()) / rec.std()
    n = ref.size
    max_lag = min(n - 1, int(math.floor(max_lag_s * fs + 1e-9)))
    lags = np.arange(-max_lag, max_lag + 1)
    corr = np.array([
        np.dot(ref[:n - lag], rec[lag:]) if lag >= 0 else np.dot(ref[-lag:], rec[:n + lag])
        for lag in lags
    ]) / n
    k = int(np.argmax(corr))
    return XcorrResult(float(np.clip(corr[k], -1.0, 1.0)), float(lags[k] / fs))


def coefficient_of_variation(values) -> float:
    """Sample CoV in percent (n - 1 denominator)."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 2:
        raise InsufficientDataError("CoV needs at least two values")
    mean = v.mean()
    if mean == 0:
        raise DegenerateInputError("CoV is undefined for zero mean")
    return float(100.0 * v.std(ddof=1) / mean)


@dataclass(frozen=True)
class AccuracyClass:
    passed: bool
    mape_pct: float
    ci95_upper_pct: float


def bootstrap_upper_bound(values, confidence: float = 0.95, resamples: int = BOOTSTRAP_RESAMPLES,
                          seed: int = 0) -> float:
    """One-sided percentile-bootstrap upper confidence bound of the mean."""
    v = np.asarray(values, dtype=float).ravel()
    rng = np.random.default_rng(seed)
    means = np.empty(resamples)
    chunk = max(1, 2_000_000 // max(1, v.size))
    for lo in range(0, resamples, chunk):
        hi = min(resamples, lo + chunk)
        means[lo:hi] = v[rng.integers(0, v.size, size=(hi - lo, v.size))].mean(axis=1)
    return float(np.quantile(means, confidence))


def classify_accuracy(ape_pct, seed: int = 0, limit_pct: float = ANSI_CTA_MAPE_LIMIT_PCT) -> AccuracyClass:
    """Pass if the bootstrap 95% upper bound of the mean APE is below ``limit_pct``."""
    ape = np.asarray(ape_pct, dtype=float).ravel()
    if ape.size < MIN_CLASSIFY_MEASUREMENTS:
        raise InsufficientDataError(
            f"need >= {MIN_CLASSIFY_MEASUREMENTS} measurements, got {ape.size}")
    upper = bootstrap_upper_bound(ape, seed=seed)
    return AccuracyClass(bool(upper < limit_pct), float(ape.mean()), upper)


@dataclass(frozen=True)
class FrameRateStats:
    mean_fps: float
    instantaneous_fps: np.ndarray
    drop_count: int


def frame_rate_stats(timestamps_s, nominal_fps: float) -> FrameRateStats:
    """Instantaneous frame rate and the number of frames missing from gaps."""
    t = np.asarray(timestamps_s, dtype=float).ravel()
    if t.size < 2:
        raise InputError("need at least two timestamps")
    gaps = np.diff(t)
    if np.any(gaps <= 0):
        raise InputError("timestamps must be strictly increasing")
    if not nominal_fps > 0:
        raise InputError("nominal_fps must be > 0")
    long_gaps = gaps[gaps > DROP_GAP_FACTOR / nominal_fps]
    drops = int(np.sum(np.rint(long_gaps * nominal_fps).astype(int) - 1))
    return FrameRateStats(float((t.size - 1) / (t[-1] - t[0])), 1.0 / gaps, drops)


@dataclass(frozen=True)
class DominantFrequency:
    freq_hz: float

    def matches_bpm(self, bpm: float, tol_hz: float) -> bool:
        return abs(self.freq_hz - bpm / 60.0) <= tol_hz


def dominant_frequency(trace: AccelTrace, band_hz=(0.5, 4.0)) -> DominantFrequency:
    """Largest in-band spectral component of an accelerometer magnitude trace."""
    low, high = (float(v) for v in band_hz)
    if not (0 < low < high):
        raise InputError(f"band must satisfy 0 < low < high, got {band_hz}")
    t = trace.timestamps_s
    if t[-1] - t[0] < 4.0 / low:
        raise InsufficientDataError(
            f"trace spans {t[-1] - t[0]:.2f} s; need {4.0 / low:g} s for a {low:g} Hz band edge")
    fs = 1.0 / float(np.median(np.diff(t)))
    _, x = uniform_grid(t, trace.magnitude, fs)
    freq, _ = spectral_peak(x, fs, low, high)
    return DominantFrequency(freq)


def read_accel_csv(path) -> AccelTrace:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t_s", "magnitude"]:
            raise ParseError(f"{path}: expected header 't_s,magnitude'")
        try:
            rows = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
        except ValueError:
            raise ParseError(f"{path}: non-numeric field") from None
    if rows.ndim != 2 or rows.shape[1] != 2:
        raise ParseError(f"{path}: expected rows of 2 fields")
    try:
        return AccelTrace(rows[:, 0], rows[:, 1])
    except InputError as exc:
        raise ParseError(f"{path}: {exc}") from None


def write_accel_csv(trace: AccelTrace, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_s", "magnitude"])
        for t, m in zip(trace.timestamps_s, trace.magnitude):
            writer.writerow([repr(float(t)), repr(float(m))])
    return path
