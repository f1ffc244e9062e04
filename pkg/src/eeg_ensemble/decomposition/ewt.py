"""Empirical wavelet transform with Meyer-type adaptive filter banks."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d

from ..errors import ClampWarning, InvalidSignal
from ._extrema import local_extrema


def meyer_beta(x):
    """Transition polynomial ``x^4 (35 - 84x + 70x^2 - 20x^3)``, clipped to [0, 1] outside."""
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    return x ** 4 * (35.0 - 84.0 * x + 70.0 * x ** 2 - 20.0 * x ** 3)


def detect_boundaries(spectrum_magnitude, num_bands: int, smooth: int = 5, grid=None) -> np.ndarray:
    """Place ``num_bands - 1`` band edges between the dominant spectral peaks.

    The magnitude is smoothed with a ``smooth``-bin moving average, the
    ``num_bands`` largest local maxima are kept (ties go to the lower index)
    and each edge is put at the lowest-index minimum between two consecutive
    kept maxima.

    Parameters
    ----------
    spectrum_magnitude : array_like
        Magnitude samples on ``grid``.
    num_bands : int
    smooth : int
        Moving-average width; 1 disables smoothing.
    grid : array_like, optional
        Angular frequency of each sample. Defaults to an even grid on [0, pi].

    Returns
    -------
    ndarray
        Strictly increasing edges in (0, pi). Fewer than ``num_bands - 1``
        edges (with a :class:`ClampWarning`) when there are not enough maxima.
    """
    mag = np.asarray(spectrum_magnitude, dtype=np.float64)
    if num_bands < 1:
        raise ValueError("num_bands must be >= 1")
    if grid is None:
        grid = np.linspace(0.0, np.pi, mag.size)
    grid = np.asarray(grid, dtype=np.float64)
    if smooth > 1:
        mag = uniform_filter1d(mag, size=smooth, mode="nearest")

    maxima, _ = local_extrema(mag, include_edges=True)
    if maxima.size < num_bands:
        warnings.warn(f"only {maxima.size} spectral maxima for {num_bands} bands; clamping",
                      ClampWarning, stacklevel=2)
    order = np.lexsort((maxima, -mag[maxima]))
    keep = np.sort(maxima[order[:num_bands]])

    edges = []
    for lo, hi in zip(keep[:-1], keep[1:]):
        between = mag[lo + 1:hi]
        edges.append(grid[lo + 1 + int(np.argmin(between))])
    return np.asarray(edges, dtype=np.float64)


def max_gamma(boundaries) -> float:
    """Largest transition ratio keeping neighbouring transitions disjoint."""
    b = np.concatenate((np.asarray(boundaries, dtype=np.float64), [np.pi]))
    if b.size < 2:
        return 1.0
    return float(np.min((b[1:] - b[:-1]) / (b[1:] + b[:-1])))


def ewt_filter_bank(boundaries, n_samples: int, gamma: float) -> np.ndarray:
    """Scaling filter plus one wavelet filter per band, on the full FFT grid.

    Returns an array of shape ``(len(boundaries) + 1, n_samples)``; row 0 is
    the low-pass scaling filter and the last row has no upper transition.
    """
    b = np.asarray(boundaries, dtype=np.float64)
    k = np.arange(n_samples)
    w = 2.0 * np.pi * np.minimum(k, n_samples - k) / n_samples
    nb = b.size + 1
    bank = np.zeros((nb, n_samples))
    if b.size == 0:
        bank[0] = 1.0
        return bank

    def rising(edge):
        # 0 below the transition, 1 above, sin-shaped inside
        lo = (1.0 - gamma) * edge
        return np.sin(0.5 * np.pi * meyer_beta((w - lo) / (2.0 * gamma * edge)))

    def falling(edge):
        lo = (1.0 - gamma) * edge
        return np.cos(0.5 * np.pi * meyer_beta((w - lo) / (2.0 * gamma * edge)))

    bank[0] = falling(b[0])
    for n in range(1, nb):
        up = rising(b[n - 1])
        down = falling(b[n]) if n < nb - 1 else 1.0
        bank[n] = up * down
    return bank


@dataclass
class EWTDetails:
    boundaries: np.ndarray
    gamma: float
    filters: np.ndarray
    uniform_fallback: bool
    clamped: bool


def ewt_decompose(channel, num_bands: int, gamma: float = 0.1, smooth: int = 5,
                  return_details: bool = False):
    """Adaptive band-pass decomposition into ``num_bands`` components.

    Component ``n`` is ``ifft(fft(x) * conj(filter_n))``; ordering is by
    ascending frequency. ``gamma`` is shrunk to :func:`max_gamma` of the
    detected edges when too large. A spectrum without any maxima falls back to
    an even split of [0, pi].
    """
    x = np.asarray(channel, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise InvalidSignal("ewt_decompose expects a 1-D channel with at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise InvalidSignal("channel contains NaN or Inf")
    if not 0.0 < gamma < 0.5:
        raise ValueError("gamma must lie in (0, 0.5)")
    n = x.size
    spec = np.fft.fft(x)
    half = np.abs(spec[: n // 2 + 1])
    grid = 2.0 * np.pi * np.arange(half.size) / n

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        edges = detect_boundaries(half, num_bands, smooth=smooth, grid=grid)
    clamped = any(issubclass(c.category, ClampWarning) for c in caught)

    fallback = False
    peaks, _ = local_extrema(uniform_filter1d(half, smooth, mode="nearest") if smooth > 1 else half,
                             include_edges=True)
    if peaks.size == 0 and num_bands > 1:
        fallback = True
        clamped = False
        edges = np.pi * np.arange(1, num_bands) / num_bands
    if clamped:
        warnings.warn(f"EWT bands clamped from {num_bands} to {edges.size + 1}", ClampWarning,
                      stacklevel=2)
    if fallback:
        warnings.warn("flat spectrum: using uniform EWT segmentation", ClampWarning, stacklevel=2)

    g = min(gamma, max_gamma(edges))
    bank = ewt_filter_bank(edges, n, g)
    components = [np.fft.ifft(spec * np.conj(f)).real for f in bank]
    if return_details:
        return components, EWTDetails(edges, g, bank, fallback, clamped)
    return components


def ewt_reconstruct(components, filters) -> list[np.ndarray]:
    """Pass each analysis component through its synthesis filter.

    For a tight frame the synthesis filter equals the analysis filter, so
    reconstructed component ``n`` is ``ifft(fft(x) * |filter_n|**2)`` and the
    reconstructed components sum to the input.
    """
    return [np.fft.ifft(np.fft.fft(c) * f).real for c, f in zip(components, filters)]

