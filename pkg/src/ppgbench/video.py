"""Map PPG waveforms to RGB targets and render dithered 8-bit frames.

A frame encodes a floating-point RGB target in the *spatial mean* of its
8-bit pixels: every pixel is an independent draw of ``round(N(target, sigma^2))``.
With enough pixels the mean recovers the target well below one quantization
step.
"""
from __future__ import annotations

import json
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from ._seeding import derive_seed
from .exceptions import (
    ConfigurationError, DegenerateSignalError, FormatError, ProfileError, RangeError,
)
from .waveform import PpgWaveform, resample

DEFAULT_DITHER_SIGMA = 2.0
GUARD_SIGMAS = 4.0

PPGV_MAGIC = b"PPGV"
PPGV_VERSION = 1

# Uniform draws are PIXEL_LUT_BITS wide; each pixel is a lookup into the
# inverse CDF of the rounded Gaussian, quantized to 2**-PIXEL_LUT_BITS.
PIXEL_LUT_BITS = 16
_LEVELS = np.arange(256, dtype=np.uint8)
_EDGES = np.arange(255) + 0.5


def guard_band(dither_sigma: float) -> float:
    return GUARD_SIGMAS * dither_sigma


@dataclass(frozen=True)
class ChannelProfile:
    """Per-channel brightness center and peak-to-trough pulse amplitude (pixel units)."""

    mean: tuple
    pulse_amplitude: tuple
    name: str = ""
    dither_sigma: float = DEFAULT_DITHER_SIGMA

    def __post_init__(self):
        mean = tuple(float(v) for v in self.mean)
        amp = tuple(float(v) for v in self.pulse_amplitude)
        if len(mean) != 3 or len(amp) != 3:
            raise ProfileError("profile needs 3 means and 3 amplitudes (R, G, B)")
        if any(a < 0 or not math.isfinite(a) for a in amp):
            raise ProfileError(f"pulse amplitudes must be non-negative, got {amp}")
        guard = guard_band(self.dither_sigma)
        for c, (m, a) in enumerate(zip(mean, amp)):
            if m - a / 2 - guard < 0 or m + a / 2 + guard > 255:
                raise ProfileError(
                    f"{self.name or 'profile'}: channel {'RGB'[c]} mean={m} amplitude={a} "
                    f"leaves the feasible band with a {guard:g}-pixel guard"
                )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "pulse_amplitude", amp)

    def to_dict(self) -> dict:
        return {"mean": list(self.mean), "pulse_amplitude": list(self.pulse_amplitude),
                "name": self.name, "dither_sigma": self.dither_sigma}

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelProfile":
        return cls(tuple(d["mean"]), tuple(d["pulse_amplitude"]), d.get("name", ""),
                   d.get("dither_sigma", DEFAULT_DITHER_SIGMA))


def standard_profiles() -> list[ChannelProfile]:
    """The four signal-strength levels used by the standard suite, strongest first."""
    profiles = []
    for name, blue_mean, blue_amp in (
        ("strong", 220.0, 4.0), ("medium", 180.0, 2.0),
        ("low", 120.0, 1.0), ("very_low", 60.0, 0.5),
    ):
        strength = blue_amp / 2.0
        profiles.append(ChannelProfile(
            mean=(230.0, 150.0, blue_mean),
            pulse_amplitude=(6.0, 3.0 * strength, blue_amp),
            name=name,
        ))
    return profiles


@dataclass(frozen=True)
class FrameSpec:
    width: int = 320
    height: int = 240
    fps: float = 30.0

    def __post_init__(self):
        if int(self.width) != self.width or int(self.height) != self.height:
            raise ConfigurationError("frame width and height must be integers")
        if self.width < 1 or self.height < 1:
            raise ConfigurationError("frame width and height must be positive")
        if self.width * self.height < 1024:
            raise ConfigurationError(
                f"frame {self.width}x{self.height} has fewer than 1024 pixels; "
                "too few for dithered averaging")
        if not (self.fps > 0 and math.isfinite(self.fps)):
            raise ConfigurationError(f"fps must be > 0, got {self.fps}")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "fps", float(self.fps))

    @property
    def n_pixels(self) -> int:
        return self.width * self.height

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "fps": self.fps}


@dataclass(frozen=True)
class MappedSignal:
    """Per-frame RGB targets, shape ``(n_frames, 3)``."""

    targets: np.ndarray
    fps: float

    def __post_init__(self):
        targets = np.array(self.targets, dtype=float)
        if targets.ndim != 2 or targets.shape[1] != 3 or targets.shape[0] == 0:
            raise ConfigurationError("targets must have shape (n_frames, 3)")
        if not np.all(np.isfinite(targets)) or targets.min() < 0 or targets.max() > 255:
            raise ProfileError("targets must lie in [0, 255]")
        if not self.fps > 0:
            raise ConfigurationError("fps must be > 0")
        targets.setflags(write=False)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "fps", float(self.fps))

    def __len__(self):
        return self.targets.shape[0]


@dataclass(frozen=True, eq=False)
class VideoClip:
    """Raw RGB24 video held in memory as ``frames[n, height, width, 3]`` (uint8)."""

    frames: np.ndarray
    spec: FrameSpec
    timestamps_s: np.ndarray

    def __post_init__(self):
        frames = np.asarray(self.frames)
        ts = np.asarray(self.timestamps_s, dtype=float)
        if frames.dtype != np.uint8 or frames.ndim != 4 or frames.shape[3] != 3:
            raise ConfigurationError("frames must be a uint8 array of shape (n, h, w, 3)")
        if frames.shape[1:3] != (self.spec.height, self.spec.width):
            raise ConfigurationError("frame shape does not match the FrameSpec")
        if ts.shape != (frames.shape[0],):
            raise ConfigurationError("need exactly one timestamp per frame")
        if ts.size > 1 and np.any(np.diff(ts) <= 0):
            raise ConfigurationError("timestamps must be strictly increasing")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "timestamps_s", ts)

    def __len__(self):
        return self.frames.shape[0]

    def __eq__(self, other):
        if not isinstance(other, VideoClip):
            return NotImplemented
        return (self.spec == other.spec
                and np.array_equal(self.timestamps_s, other.timestamps_s)
                and np.array_equal(self.frames, other.frames))


def map_ppg_to_rgb(waveform: PpgWaveform, profile: ChannelProfile, fps: float) -> MappedSignal:
    """Resample to ``fps``, min-max normalize, invert and rescale per channel.

    ``target_c = mean_c + amplitude_c * (0.5 - p)`` so PPG maxima (more blood,
    more absorption) become the darkest frames.
    """
    if not (fps > 0 and math.isfinite(fps)):
        raise ConfigurationError(f"fps must be > 0, got {fps}")
    x = resample(waveform, fps).samples
    lo, hi = x.min(), x.max()
    if hi == lo:
        raise DegenerateSignalError("cannot map a constant waveform")
    p = (x - lo) / (hi - lo)
    mean = np.asarray(profile.mean)
    amp = np.asarray(profile.pulse_amplitude)
    targets = mean[None, :] + amp[None, :] * (0.5 - p[:, None])
    guard = guard_band(profile.dither_sigma)
    if targets.min() < guard or targets.max() > 255 - guard:
        raise ProfileError("mapped targets leave the feasible band")
    return MappedSignal(targets, fps)


def _check_feasible(target_rgb, dither_sigma: float) -> np.ndarray:
    target = np.asarray(target_rgb, dtype=float)
    if target.shape != (3,):
        raise ConfigurationError("target_rgb must have 3 components")
    if not (dither_sigma >= 0 and math.isfinite(dither_sigma)):
        raise ConfigurationError("dither_sigma must be a finite non-negative number")
    guard = guard_band(dither_sigma)
    if np.any(target < guard) or np.any(target > 255 - guard):
        raise RangeError(
            f"target {target.tolist()} outside [{guard:g}, {255 - guard:g}] for sigma={dither_sigma}")
    return target


def _pixel_lut(mu: float, sigma: float) -> np.ndarray:
    # Inverse CDF of round(N(mu, sigma^2)) clamped to [0, 255], tabulated on 2**bits uniform levels.
    m = 1 << PIXEL_LUT_BITS
    cuts = np.rint(ndtr((_EDGES - mu) / sigma) * m).astype(np.int64)
    counts = np.diff(cuts, prepend=0, append=m)
    return np.repeat(_LEVELS, counts)


def render_frame(target_rgb, spec: FrameSpec, dither_sigma: float = DEFAULT_DITHER_SIGMA,
                 frame_seed: int = 0) -> np.ndarray:
    """Render one ``(height, width, 3)`` uint8 frame whose channel means approximate ``target_rgb``.

    Pixels are independent draws of the rounded Gaussian, sampled by inverse
    CDF lookup from one uniform 16-bit draw per pixel. Targets closer than
    ``4 * dither_sigma`` to either end of the 8-bit range are rejected so the
    clamp never biases the mean.
    """
    target = _check_feasible(target_rgb, dither_sigma)
    frame = np.empty((spec.height, spec.width, 3), dtype=np.uint8)
    if dither_sigma == 0:
        frame[...] = np.rint(target).astype(np.uint8)
        return frame
    rng = np.random.Generator(np.random.Philox(key=int(frame_seed) % 2**64))
    draws = rng.integers(0, 1 << PIXEL_LUT_BITS, size=(3, spec.height, spec.width), dtype=np.uint16)
    for c in range(3):
        frame[..., c] = _pixel_lut(target[c], dither_sigma)[draws[c]]
    return frame


def frame_seed(clip_seed: int, index: int) -> int:
    return derive_seed(int(clip_seed), int(index), "frame")


def iter_frames(mapped: MappedSignal, spec: FrameSpec, dither_sigma: float = DEFAULT_DITHER_SIGMA,
                clip_seed: int = 0):
    """Yield ``(timestamp, frame)`` pairs one at a time (streaming encode)."""
    _validate_targets(mapped, dither_sigma)
    for i, target in enumerate(mapped.targets):
        yield i / mapped.fps, render_frame(target, spec, dither_sigma, frame_seed(clip_seed, i))


def _validate_targets(mapped: MappedSignal, dither_sigma: float):
    guard = guard_band(dither_sigma)
    t = mapped.targets
    if t.min() < guard or t.max() > 255 - guard:
        bad = int(np.argmax(np.any((t < guard) | (t > 255 - guard), axis=1)))
        raise RangeError(f"target {bad} ({t[bad].tolist()}) infeasible for sigma={dither_sigma}")


def encode_video(mapped: MappedSignal, spec: FrameSpec, dither_sigma: float = DEFAULT_DITHER_SIGMA,
                 clip_seed: int = 0, n_jobs: int = 1) -> VideoClip:
    """Render one frame per target. Output is identical for any ``n_jobs``."""
    _validate_targets(mapped, dither_sigma)
    if mapped.fps != spec.fps:
        spec = FrameSpec(spec.width, spec.height, mapped.fps)
    n = len(mapped)
    frames = np.empty((n, spec.height, spec.width, 3), dtype=np.uint8)

    def work(i):
        frames[i] = render_frame(mapped.targets[i], spec, dither_sigma, frame_seed(clip_seed, i))

    if n_jobs == 1:
        for i in range(n):
            work(i)
    else:
        with ThreadPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as pool:
            list(pool.map(work, range(n)))
    return VideoClip(frames, spec, np.arange(n) / mapped.fps)


def write_video(clip: VideoClip, path) -> Path:
    """Write ``clip`` as a PPGV container (raw RGB24, JSON header)."""
    path = Path(path)
    header = json.dumps({
        "width": clip.spec.width, "height": clip.spec.height, "fps": clip.spec.fps,
        "frames": len(clip), "colorspace": "RGB24",
    }).encode("utf-8")
    with path.open("wb") as fh:
        fh.write(PPGV_MAGIC)
        fh.write(struct.pack("<HI", PPGV_VERSION, len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(clip.frames).tobytes())
    return path


def read_video(path) -> VideoClip:
    """Read a PPGV container written by :func:`write_video`."""
    data = Path(path).read_bytes()
    if len(data) < 10 or data[:4] != PPGV_MAGIC:
        raise FormatError(f"{path}: not a PPGV file (bad magic)")
    version, header_len = struct.unpack_from("<HI", data, 4)
    if version != PPGV_VERSION:
        raise FormatError(f"{path}: unsupported PPGV version {version}")
    start = 10 + header_len
    if len(data) < start:
        raise FormatError(f"{path}: truncated header")
    try:
        header = json.loads(data[10:start].decode("utf-8"))
        width, height, fps, n = (int(header["width"]), int(header["height"]),
                                 float(header["fps"]), int(header["frames"]))
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: bad header ({exc})") from None
    if header.get("colorspace") != "RGB24":
        raise FormatError(f"{path}: unsupported colorspace {header.get('colorspace')!r}")
    frame_bytes = width * height * 3
    payload = len(data) - start
    if payload != n * frame_bytes:
        raise FormatError(
            f"{path}: header declares {n} frames but payload holds {payload / frame_bytes:g}")
    try:
        spec = FrameSpec(width, height, fps)
    except ConfigurationError as exc:
        raise FormatError(f"{path}: {exc}") from None
    frames = np.frombuffer(data, dtype=np.uint8, offset=start).reshape(n, height, width, 3)
    return VideoClip(frames, spec, np.arange(n) / fps)


def dump_png_frames(clip: VideoClip, directory) -> Path:
    """Write every frame as ``NNNNNN.png`` for visual debugging (needs Pillow)."""
    from PIL import Image

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(clip.frames):
        Image.fromarray(frame, mode="RGB").save(directory / f"{i:06d}.png")
    return directory
