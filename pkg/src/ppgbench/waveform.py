"""PPG waveform synthesis, noise injection, resampling and CSV I/O."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal

from ._seeding import make_rng
from .exceptions import ConfigurationError, DegenerateSignalError, ParseError

# Beat template: (center, width, amplitude), center/width as fractions of the beat period.
SYSTOLIC_LOBE = (0.30, 0.12, 1.0)
DICROTIC_LOBE = (0.65, 0.18, 0.35)

MOTION_BURST_S = 0.5
_MAX_SAMPLE_INTERVAL_DEVIATION = 0.01


@dataclass(frozen=True)
class PpgWaveform:
    """Uniformly sampled PPG signal in arbitrary units."""

    samples: np.ndarray
    sample_rate_hz: float
    label: str = ""

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ConfigurationError("waveform needs a non-empty 1-D sample array")
        if not np.all(np.isfinite(samples)):
            raise ConfigurationError("waveform samples must be finite")
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise ConfigurationError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate_hz


@dataclass(frozen=True)
class SynthConfig:
    """Parameters for :func:`synthesize_ppg`. All artifacts default to off."""

    heart_rate_bpm: float = 75.0
    duration_s: float = 20.0
    sample_rate_hz: float = 100.0
    rsa_freq_hz: float = 0.25
    rsa_depth: float = 0.0
    drift_freq_hz: float = 0.0
    drift_amplitude: float = 0.0
    powerline_freq_hz: float = 0.0
    powerline_amplitude: float = 0.0
    motion_burst_rate_per_min: float = 0.0
    motion_burst_amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        hr = self.heart_rate_bpm
        if not (30.0 <= hr <= 240.0):
            raise ConfigurationError(f"heart_rate_bpm must be in [30, 240], got {hr}")
        if not self.duration_s > 0:
            raise ConfigurationError(f"duration_s must be > 0, got {self.duration_s}")
        if not self.sample_rate_hz > 0:
            raise ConfigurationError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        if self.sample_rate_hz < 4.0 * hr / 60.0:
            raise ConfigurationError(
                f"sample_rate_hz={self.sample_rate_hz} is below 4x the heart rate frequency"
            )
        for name in (
            "rsa_freq_hz", "rsa_depth", "drift_freq_hz", "drift_amplitude",
            "powerline_freq_hz", "powerline_amplitude",
            "motion_burst_rate_per_min", "motion_burst_amplitude",
        ):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ConfigurationError(f"{name} must be a finite non-negative number, got {value}")
        if self.rsa_depth >= 1.0:
            raise ConfigurationError("rsa_depth must be < 1 (heart rate would go non-positive)")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigurationError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown SynthConfig fields: {sorted(unknown)}")
        return cls(**d)


def beat_template(phase) -> np.ndarray:
    """Two-Gaussian PPG beat evaluated at beat phase (0 = onset, 1 = next onset)."""
    phase = np.asarray(phase, dtype=float)
    out = np.zeros_like(phase)
    for center, width, amp in (SYSTOLIC_LOBE, DICROTIC_LOBE):
        out += amp * np.exp(-0.5 * ((phase - center) / width) ** 2)
    return out


def beat_phase(t, config: SynthConfig, phase0: float = 0.0) -> np.ndarray:
    """Cumulative beat count at times ``t`` (integral of the instantaneous rate)."""
    f0 = config.heart_rate_bpm / 60.0
    phase = f0 * np.asarray(t, dtype=float)
    if config.rsa_depth > 0 and config.rsa_freq_hz > 0:
        w = 2.0 * np.pi * config.rsa_freq_hz
        phase = phase + f0 * config.rsa_depth * (1.0 - np.cos(w * t)) / w
    return phase + phase0


def synthesize_ppg(config: SynthConfig) -> PpgWaveform:
    """Synthesize a PPG waveform normalized to [0, 1].

    Beats are tiled in the phase domain so that, with RSA off, the output is
    exactly periodic at ``heart_rate_bpm / 60`` Hz. The seed sets the initial
    beat phase and drives drift phase and motion-burst arrivals.
    """
    n = int(round(config.duration_s * config.sample_rate_hz))
    if n < 2:
        raise ConfigurationError("duration_s * sample_rate_hz must give at least 2 samples")
    rng = make_rng(int(config.seed), "synth")
    t = np.arange(n) / config.sample_rate_hz
    phase = beat_phase(t, config, phase0=rng.random())

    frac = phase - np.floor(phase)
    # Neighbouring beats overlap because the dicrotic lobe is wide.
    x = beat_template(frac) + beat_template(frac + 1.0) + beat_template(frac - 1.0)

    if config.drift_amplitude > 0 and config.drift_freq_hz > 0:
        x += config.drift_amplitude * np.sin(
            2 * np.pi * config.drift_freq_hz * t + 2 * np.pi * rng.random())
    if config.powerline_amplitude > 0 and config.powerline_freq_hz > 0:
        x += config.powerline_amplitude * np.sin(2 * np.pi * config.powerline_freq_hz * t)
    if config.motion_burst_amplitude > 0 and config.motion_burst_rate_per_min > 0:
        x += _motion_bursts(t, config, rng)

    lo, hi = x.min(), x.max()
    if hi == lo:
        raise DegenerateSignalError("synthesized waveform is constant")
    label = f"synth hr={config.heart_rate_bpm:g}bpm seed={config.seed}"
    return PpgWaveform((x - lo) / (hi - lo), config.sample_rate_hz, label)


def _motion_bursts(t, config: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    rate_hz = config.motion_burst_rate_per_min / 60.0
    duration = t[-1] + 1.0 / config.sample_rate_hz
    onsets = []
    clock = rng.exponential(1.0 / rate_hz)
    while clock < duration:
        onsets.append(clock)
        clock += rng.exponential(1.0 / rate_hz)
    out = np.zeros_like(t)
    for onset in onsets:
        u = (t - onset) / MOTION_BURST_S
        inside = (u >= 0) & (u <= 1)
        out[inside] += config.motion_burst_amplitude * 0.5 * (1 - np.cos(2 * np.pi * u[inside]))
    return out


def add_noise(waveform: PpgWaveform, snr_db: float, seed: int = 0) -> PpgWaveform:
    """Add white Gaussian noise at an exact signal-to-noise ratio.

    Signal power is the mean-removed power of the input. The drawn noise is
    centered and rescaled so its realized power hits the target exactly.
    """
    if not math.isfinite(snr_db):
        raise ConfigurationError("snr_db must be finite")
    x = waveform.samples
    signal_power = np.mean((x - x.mean()) ** 2)
    if signal_power == 0.0:
        raise DegenerateSignalError("cannot set an SNR against a constant waveform")
    if x.size < 2:
        raise DegenerateSignalError("need at least two samples to add noise")
    noise = make_rng(int(seed), "noise").standard_normal(x.size)
    noise -= noise.mean()
    target_power = signal_power / 10.0 ** (snr_db / 10.0)
    noise *= np.sqrt(target_power / np.mean(noise**2))
    label = f"{waveform.label} +noise({snr_db:g}dB)".strip()
    return PpgWaveform(x + noise, waveform.sample_rate_hz, label)


def lowpass_fir(cutoff_hz: float, fs: float) -> np.ndarray:
    """Hamming-windowed sinc low-pass with roughly 8 cutoff periods of support."""
    half = max(15, int(math.ceil(4.0 * fs / cutoff_hz)))
    return signal.firwin(2 * half + 1, cutoff_hz, fs=fs)


def resample(waveform: PpgWaveform, target_rate_hz: float) -> PpgWaveform:
    """Anti-alias filter, then sample at ``target_rate_hz`` by linear interpolation."""
    if not (target_rate_hz > 0 and math.isfinite(target_rate_hz)):
        raise ConfigurationError(f"target_rate_hz must be > 0, got {target_rate_hz}")
    src = waveform.sample_rate_hz
    if target_rate_hz == src:
        return waveform
    x = waveform.samples
    taps = lowpass_fir(0.45 * min(src, target_rate_hz), src)
    half = taps.size // 2
    padded = np.pad(x, half, mode="reflect") if x.size > 1 else np.pad(x, half, mode="edge")
    filtered = np.convolve(padded, taps, mode="valid")
    n_out = max(1, int(round(x.size * target_rate_hz / src)))
    t_out = np.arange(n_out) / target_rate_hz
    y = np.interp(t_out, np.arange(x.size) / src, filtered)
    return PpgWaveform(y, target_rate_hz, waveform.label)


def load_waveform(path, format: str = "csv") -> PpgWaveform:
    """Read a ``t_s,value`` CSV file."""
    if format != "csv":
        raise ConfigurationError(f"unsupported waveform format {format!r}")
    path = Path(path)
    times, values = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t_s", "value"]:
            raise ParseError(f"{path}: expected header 't_s,value', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                t, v = float(row[0]), float(row[1])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric field in {row}") from None
            if not (math.isfinite(t) and math.isfinite(v)):
                raise ParseError(f"{path}:{lineno}: non-finite value")
            times.append(t)
            values.append(v)
    if len(times) < 2:
        raise ParseError(f"{path}: need at least 2 samples to infer the sample rate")
    t = np.asarray(times)
    dt = np.diff(t)
    if np.any(dt <= 0):
        bad = int(np.argmax(dt <= 0)) + 3
        raise ParseError(f"{path}:{bad}: time column is not strictly increasing")
    step = (t[-1] - t[0]) / (t.size - 1)
    if np.max(np.abs(dt - step)) > _MAX_SAMPLE_INTERVAL_DEVIATION * step:
        raise ParseError(f"{path}: sampling interval varies by more than 1%")
    return PpgWaveform(np.asarray(values), 1.0 / step, path.name)


def save_waveform(waveform: PpgWaveform, path) -> Path:
    """Write ``waveform`` in the ``t_s,value`` CSV format (full float precision)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_s", "value"])
        for t, v in zip(waveform.times, waveform.samples):
            writer.writerow([repr(float(t)), repr(float(v))])
    return path
