"""Virtual device under test: frame decoding and acquisition-path degradations."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._seeding import make_rng
from .exceptions import ConfigurationError, DegenerateOutputError, InputError, ParseError
from .video import VideoClip

DROP_MODES = ("none", "uniform", "hr_dependent")
HR_DROP_THRESHOLD_BPM = 120.0
HR_DROP_CAP = 0.95
MIN_TIMESTAMP_GAP_S = 1e-4


@dataclass(frozen=True, eq=False)
class RecoveredSignal:
    """Per-frame spatial means as seen by the device, possibly irregularly timed."""

    timestamps_s: np.ndarray
    means: np.ndarray
    nominal_fps: float

    def __post_init__(self):
        ts = np.array(self.timestamps_s, dtype=float)
        means = np.array(self.means, dtype=float)
        if ts.ndim != 1 or ts.size == 0:
            raise InputError("recovered signal needs at least one timestamp")
        if means.shape != (ts.size, 3):
            raise InputError(f"means must have shape ({ts.size}, 3), got {means.shape}")
        if np.any(np.diff(ts) <= 0):
            raise InputError("timestamps must be strictly increasing")
        if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(means))):
            raise InputError("timestamps and means must be finite")
        if not (self.nominal_fps > 0 and math.isfinite(self.nominal_fps)):
            raise InputError("nominal_fps must be > 0")
        ts.setflags(write=False)
        means.setflags(write=False)
        object.__setattr__(self, "timestamps_s", ts)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "nominal_fps", float(self.nominal_fps))

    def __len__(self):
        return self.timestamps_s.size

    def __eq__(self, other):
        if not isinstance(other, RecoveredSignal):
            return NotImplemented
        return (self.nominal_fps == other.nominal_fps
                and np.array_equal(self.timestamps_s, other.timestamps_s)
                and np.array_equal(self.means, other.means))

    def channel(self, name) -> np.ndarray:
        return self.means[:, channel_index(name)]


def channel_index(name) -> int:
    if isinstance(name, (int, np.integer)) and 0 <= name < 3:
        return int(name)
    try:
        return "RGB".index(str(name).upper())
    except ValueError:
        raise ConfigurationError(f"channel must be one of R, G, B; got {name!r}") from None


@dataclass(frozen=True)
class DegradationConfig:
    """Frame drops, timestamp jitter and sensor noise applied to a recovered signal.

    ``drop_mode`` is ``"none"``, ``"uniform"`` (each frame dropped with
    probability ``drop_p``) or ``"hr_dependent"`` where the drop probability is
    ``min(0.95, base_p + slope_per_bpm * max(0, HR - 120))``.
    """

    drop_mode: str = "none"
    drop_p: float = 0.0
    base_p: float = 0.0
    slope_per_bpm: float = 0.0
    jitter_std_ms: float = 0.0
    sensor_noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.drop_mode not in DROP_MODES:
            raise ConfigurationError(f"drop_mode must be one of {DROP_MODES}, got {self.drop_mode!r}")
        for name in ("drop_p", "base_p"):
            p = getattr(self, name)
            if not (0.0 <= p < 1.0):
                raise ConfigurationError(f"{name} must be in [0, 1), got {p}")
        for name in ("slope_per_bpm", "jitter_std_ms", "sensor_noise_std"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ConfigurationError(f"{name} must be a finite non-negative number, got {v}")

    @classmethod
    def uniform(cls, p: float, **kw) -> "DegradationConfig":
        return cls(drop_mode="uniform", drop_p=p, **kw)

    @classmethod
    def hr_dependent(cls, base_p: float, slope_per_bpm: float, **kw) -> "DegradationConfig":
        return cls(drop_mode="hr_dependent", base_p=base_p, slope_per_bpm=slope_per_bpm, **kw)

    @property
    def is_identity(self) -> bool:
        no_drops = (self.drop_mode == "none"
                    or (self.drop_mode == "uniform" and self.drop_p == 0)
                    or (self.drop_mode == "hr_dependent" and self.base_p == 0
                        and self.slope_per_bpm == 0))
        return no_drops and self.jitter_std_ms == 0 and self.sensor_noise_std == 0

    def drop_probability(self, heart_rate_bpm: float | None = None) -> float:
        if self.drop_mode == "none":
            return 0.0
        if self.drop_mode == "uniform":
            return self.drop_p
        if heart_rate_bpm is None:
            raise ConfigurationError("hr_dependent drops need the heart rate of the played signal")
        excess = max(0.0, heart_rate_bpm - HR_DROP_THRESHOLD_BPM)
        return min(HR_DROP_CAP, self.base_p + self.slope_per_bpm * excess)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "DegradationConfig":
        return cls(**d)


def frame_channel_sums(frame: np.ndarray) -> np.ndarray:
    """Exact int64 per-channel pixel sums of one ``(h, w, 3)`` uint8 frame."""
    return np.einsum("ij->j", frame.reshape(-1, 3).astype(np.int64))


def decode_frames(frames, timestamps_s, nominal_fps: float) -> RecoveredSignal:
    """Decode an iterable of frames; lets callers stream without holding the clip."""
    sums, n_pixels = [], None
    for frame in frames:
        n_pixels = frame.shape[0] * frame.shape[1]
        sums.append(frame_channel_sums(frame))
    if not sums:
        raise InputError("cannot decode an empty clip")
    means = np.asarray(sums, dtype=np.int64) / n_pixels
    return RecoveredSignal(np.asarray(timestamps_s, dtype=float), means, nominal_fps)


def decode_video(clip: VideoClip) -> RecoveredSignal:
    """Spatial mean of every channel of every frame (integer-exact accumulation)."""
    if len(clip) == 0:
        raise InputError("cannot decode an empty clip")
    return decode_frames(clip.frames, clip.timestamps_s, clip.spec.fps)


def apply_degradation(signal: RecoveredSignal, config: DegradationConfig,
                      heart_rate_bpm: float | None = None) -> RecoveredSignal:
    """Drop frames, jitter timestamps and add sensor noise, all from ``config.seed``.

    Dropped frames lose both the sample and the timestamp. ``heart_rate_bpm``
    is only needed for the ``hr_dependent`` drop mode.
    """
    p = config.drop_probability(heart_rate_bpm)
    if config.is_identity:
        return signal
    rng = make_rng(int(config.seed), "degrade")
    drop_u = rng.random(len(signal))
    jitter = rng.standard_normal(len(signal))
    noise = rng.standard_normal((len(signal), 3))

    keep = drop_u >= p
    if not keep.any():
        raise DegenerateOutputError("every frame was dropped")
    t = signal.timestamps_s[keep]
    means = signal.means[keep]

    if config.jitter_std_ms > 0:
        t = t + jitter[keep] * (config.jitter_std_ms / 1000.0)
        order = np.argsort(t, kind="stable")
        t, means = t[order], means[order]
        for i in range(1, t.size):
            if t[i] <= t[i - 1]:
                t[i] = t[i - 1] + MIN_TIMESTAMP_GAP_S
    if config.sensor_noise_std > 0:
        means = means + noise[keep] * config.sensor_noise_std
    return RecoveredSignal(t, means, signal.nominal_fps)


def inject_motion(signal: RecoveredSignal, freq_hz: float, amplitude: float,
                  phase: float = 0.0) -> RecoveredSignal:
    """Add a sinusoidal motion artifact (pixel units) to every channel."""
    if not (freq_hz > 0 and amplitude >= 0):
        raise ConfigurationError("motion needs freq_hz > 0 and amplitude >= 0")
    wobble = amplitude * np.sin(2 * np.pi * freq_hz * signal.timestamps_s + phase)
    return RecoveredSignal(signal.timestamps_s, signal.means + wobble[:, None], signal.nominal_fps)


def write_recovered_csv(signal: RecoveredSignal, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_s", "r_mean", "g_mean", "b_mean"])
        for t, (r, g, b) in zip(signal.timestamps_s, signal.means):
            writer.writerow([f"{t:.9g}", f"{r:.9g}", f"{g:.9g}", f"{b:.9g}"])
    return path


def read_recovered_csv(path, nominal_fps: float | None = None) -> RecoveredSignal:
    """Read a ``t_s,r_mean,g_mean,b_mean`` file.

    Without ``nominal_fps`` the rate is inferred from the median frame interval.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t_s", "r_mean", "g_mean", "b_mean"]:
            raise ParseError(f"{path}: expected header 't_s,r_mean,g_mean,b_mean'")
        try:
            rows = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
        except ValueError:
            raise ParseError(f"{path}: non-numeric field") from None
    if rows.ndim != 2 or rows.shape[0] == 0 or rows.shape[1] != 4:
        raise ParseError(f"{path}: expected at least one row of 4 fields")
    if nominal_fps is None:
        if rows.shape[0] < 2:
            raise ParseError(f"{path}: cannot infer the frame rate from one row")
        nominal_fps = 1.0 / float(np.median(np.diff(rows[:, 0])))
    try:
        return RecoveredSignal(rows[:, 0], rows[:, 1:], nominal_fps)
    except InputError as exc:
        raise ParseError(f"{path}: {exc}") from None
