from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.signal import find_peaks

from .errors import ParameterError

TWO_PI = 2.0 * math.pi


def fmt(x: float) -> str:
    """Compact number for summary lines."""
    if x == 0 or not math.isfinite(x):
        return str(x)
    if 1e-3 <= abs(x) < 1e6:
        return f"{x:.6g}"
    return f"{x:.4e}"


def fractional_part(x: float) -> float:
    """x - floor(x), always in [0, 1)."""
    f = x - math.floor(x)
    return 0.0 if f >= 1.0 else f


def wrap_angle(theta):
    """Map angles into [-pi, pi)."""
    return np.mod(np.asarray(theta) + math.pi, TWO_PI) - math.pi


def default_cutoff(n_mean: float) -> int:
    """Fock cutoff holding a Poisson distribution of mean n_mean.

    ceil(n + 12 sqrt(n)) covers the tail for large n; the additive margin keeps
    the small-n tail below 1e-8 in amplitude too.
    """
    return int(math.ceil(n_mean + 12.0 * math.sqrt(max(n_mean, 0.0)))) + 24


def oscillation_frequency(t: Sequence[float], x: Sequence[float], center: bool = True) -> float:
    """Angular frequency from upward zero crossings (linearly interpolated)."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if center:
        x = x - x.mean()
    idx = np.nonzero((x[:-1] < 0.0) & (x[1:] >= 0.0))[0]
    if idx.size < 3:
        raise ParameterError(f"need at least 3 upward zero crossings, found {idx.size}")
    x0, x1 = x[idx], x[idx + 1]
    tc = t[idx] + (t[idx + 1] - t[idx]) * (-x0) / (x1 - x0)
    return TWO_PI * (tc.size - 1) / (tc[-1] - tc[0])


def spectral_peaks(t: Sequence[float], x: Sequence[float], count: int = 2, pad: int = 8) -> np.ndarray:
    """Angular frequencies of the `count` strongest spectral lines, ascending.

    Hann window, zero padding and a parabolic fit on the log magnitude around
    each local maximum. Samples must be uniformly spaced.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if t.size < 16:
        raise ParameterError("too few samples for a spectrum")
    dt = float(t[1] - t[0])
    x = (x - x.mean()) * np.hanning(x.size)
    nfft = 1 << int(math.ceil(math.log2(x.size * pad)))
    mag = np.abs(np.fft.rfft(x, n=nfft))
    omega = TWO_PI * np.fft.rfftfreq(nfft, dt)

    peaks, _ = find_peaks(mag)
    if peaks.size == 0:
        raise ParameterError("no spectral peak found")
    peaks = peaks[np.argsort(mag[peaks])[::-1][:count]]

    out = []
    dw = omega[1] - omega[0]
    for p in peaks:
        if 0 < p < mag.size - 1:
            a, b, c = np.log(mag[p - 1 : p + 2] + 1e-300)
            denom = a - 2.0 * b + c
            shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
        else:
            shift = 0.0
        out.append(omega[p] + shift * dw)
    return np.sort(np.asarray(out))
