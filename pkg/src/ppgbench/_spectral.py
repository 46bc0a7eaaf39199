"""Peak picking on a zero-padded, Hann-windowed magnitude spectrum."""
from __future__ import annotations

import numpy as np

from .exceptions import BandError


def uniform_grid(timestamps, values, fs: float):
    """Linearly interpolate ``values`` sampled at ``timestamps`` onto a grid at ``fs``."""
    t = np.asarray(timestamps, dtype=float)
    span = t[-1] - t[0]
    n = int(np.floor(span * fs + 1e-9)) + 1
    grid = t[0] + np.arange(n) / fs
    return grid, np.interp(grid, t, np.asarray(values, dtype=float))


def parabolic_offset(y_left: float, y_mid: float, y_right: float) -> float:
    """Vertex offset (in bins, within [-0.5, 0.5]) of the parabola through three points."""
    denom = y_left - 2.0 * y_mid + y_right
    if denom == 0.0:
        return 0.0
    return float(np.clip(0.5 * (y_left - y_right) / denom, -0.5, 0.5))


def spectral_peak(x, fs: float, f_low: float, f_high: float):
    """Return ``(freq_hz, energy_fraction)`` of the largest in-band peak.

    ``x`` must already be uniformly sampled. It is mean-removed and
    Hann-windowed here. ``energy_fraction`` is the share of positive-frequency
    power that falls within the Hann main lobe around the peak.
    """
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    n = x.size
    scale = np.max(np.abs(x)) if n else 0.0
    if n < 3 or scale == 0.0 or not np.isfinite(scale):
        raise BandError("signal has no spectral content")
    mag = np.abs(np.fft.rfft(x * np.hanning(n)))
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    in_band = np.flatnonzero((freqs >= f_low) & (freqs <= f_high))
    if in_band.size == 0:
        raise BandError(f"no spectral bin inside [{f_low}, {f_high}] Hz at fs={fs}")
    power = mag**2
    total = power[1:].sum()
    if total <= (1e-12 * scale) ** 2 * n:
        raise BandError("spectrum is empty after mean removal")
    k = int(in_band[np.argmax(mag[in_band])])
    offset = 0.0
    if 0 < k < mag.size - 1:
        offset = parabolic_offset(mag[k - 1], mag[k], mag[k + 1])
    df = freqs[1] - freqs[0]
    freq = float(np.clip(freqs[k] + offset * df, f_low, f_high))
    # Hann main lobe spans +-2 bins.
    lobe = power[max(k - 2, 1):k + 3].sum()
    return freq, float(min(1.0, lobe / total))
