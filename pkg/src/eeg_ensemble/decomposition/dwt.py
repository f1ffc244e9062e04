"""Multilevel DWT via the Mallat pyramid, returning band reconstructions.

Each returned component is a full-length signal: the inverse transform of a
single coefficient band with every other band zeroed. Because the periodized
filter bank is orthonormal, the components sum back to the input.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from ..errors import ClampWarning, InvalidSignal, SignalTooShort

# Orthonormal low-pass decomposition filters.
WAVELETS = {
    "haar": np.array([1.0, 1.0]) / math.sqrt(2.0),
    "db4": np.array([
        -0.010597401785069032105, 0.032883011666885199735,
        0.030841381835560763627, -0.18703481171909308408,
        -0.027983769416859854211, 0.63088076792985890788,
        0.71484657055291564709, 0.23037781330889650086,
    ]),
}


def filter_bank(wavelet: str):
    """Return the (low-pass, high-pass) analysis pair for ``wavelet``."""
    try:
        h = WAVELETS[wavelet]
    except KeyError:
        raise ValueError(f"unknown wavelet {wavelet!r}; choose from {sorted(WAVELETS)}") from None
    # quadrature mirror: g[n] = (-1)^n h[L-1-n]
    g = h[::-1].copy()
    g[1::2] *= -1
    return h, g


def max_levels(n_samples: int, wavelet: str = "db4") -> int:
    """Deepest useful level, ``floor(log2(T / (L - 1)))`` for filter length L."""
    flen = filter_bank(wavelet)[0].size
    if n_samples < flen:
        return 0
    return max(0, int(math.floor(math.log2(n_samples / (flen - 1)))))


def _analysis(x, h, g):
    # a[k] = sum_n h[n] x[(2k + n) mod N]
    n = x.size
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(h.size)[None, :]) % n
    win = x[idx]
    return win @ h, win @ g


def _synthesis(a, d, h, g):
    n = 2 * a.size
    out = np.zeros(n)
    idx = (2 * np.arange(a.size)[:, None] + np.arange(h.size)[None, :]) % n
    np.add.at(out, idx, a[:, None] * h[None, :] + d[:, None] * g[None, :])
    return out


def wavedec(x, levels: int, wavelet: str = "db4"):
    """Periodic multilevel DWT of a length divisible by ``2**levels``.

    Returns ``[cA_J, cD_J, ..., cD_1]``.
    """
    h, g = filter_bank(wavelet)
    a = np.asarray(x, dtype=np.float64)
    if a.size % (2 ** levels):
        raise ValueError(f"length {a.size} not divisible by 2**{levels}")
    details = []
    for _ in range(levels):
        a, d = _analysis(a, h, g)
        details.append(d)
    return [a] + details[::-1]


def waverec(coeffs, wavelet: str = "db4") -> np.ndarray:
    """Inverse of :func:`wavedec`."""
    h, g = filter_bank(wavelet)
    a = np.asarray(coeffs[0], dtype=np.float64)
    for d in coeffs[1:]:
        a = _synthesis(a, np.asarray(d, dtype=np.float64), h, g)
    return a


def dwt_decompose(channel, levels: int, wavelet: str = "db4") -> list[np.ndarray]:
    """Split ``channel`` into ``levels + 1`` band reconstructions.

    Parameters
    ----------
    channel : array_like, shape (T,)
    levels : int
        Requested depth. Values beyond :func:`max_levels` are clamped and a
        :class:`ClampWarning` is emitted.
    wavelet : {'db4', 'haar'}

    Returns
    -------
    list of ndarray
        ``[A_J, D_J, ..., D_1]``, i.e. ordered by ascending frequency.
    """
    x = np.asarray(channel, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidSignal("dwt_decompose expects a 1-D channel")
    if not np.all(np.isfinite(x)):
        raise InvalidSignal("channel contains NaN or Inf")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    h, _ = filter_bank(wavelet)
    n = x.size
    if n < h.size:
        raise SignalTooShort(f"T={n} is shorter than the {wavelet} filter length {h.size}")
    cap = max_levels(n, wavelet)
    if levels > cap:
        warnings.warn(f"DWT levels {levels} clamped to {cap} for T={n}, {wavelet}", ClampWarning,
                      stacklevel=2)
        levels = cap

    block = 2 ** levels
    padded_len = -(-n // block) * block
    xp = np.zeros(padded_len)
    xp[:n] = x
    coeffs = wavedec(xp, levels, wavelet)

    components = []
    for band in range(len(coeffs)):
        masked = [c if i == band else np.zeros_like(c) for i, c in enumerate(coeffs)]
        components.append(waverec(masked, wavelet)[:n])
    return components
