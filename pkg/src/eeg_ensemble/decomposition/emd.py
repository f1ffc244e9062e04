"""Empirical mode decomposition by envelope-mean sifting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import cubic_spline
from ..errors import InvalidSignal
from ._extrema import count_extrema, count_zero_crossings, local_extrema


@dataclass(frozen=True)
class SiftConfig:
    """Stopping rule for the inner sifting loop.

    Sifting stops once the Cauchy-type difference
    ``sum((h_prev - h)**2) / sum(h_prev**2)`` drops below ``sd_threshold``
    and the candidate satisfies the extrema/zero-crossing condition, or after
    ``max_sifts`` iterations. IMF extraction ends once the residue norm is
    below ``residue_tol`` times the input norm (spline end effects otherwise
    leave tiny spurious IMFs behind a clean tone).
    """

    sd_threshold: float = 0.2
    max_sifts: int = 100
    mirror_extrema: int = 2
    min_extrema: int = 4
    residue_tol: float = 1e-3


def is_imf(h) -> bool:
    """Counts condition plus strict sign alternation of the extrema.

    Requiring every maximum to be positive and every minimum negative makes
    extrema and zero crossings interleave, so the count condition also holds
    on any sub-window of ``h``, not just on the whole signal.
    """
    maxima, minima = local_extrema(h)
    if np.any(h[maxima] <= 0) or np.any(h[minima] >= 0):
        return False
    return abs(maxima.size + minima.size - count_zero_crossings(h)) <= 1


def _mirror(locs, vals, n, k):
    """Reflect up to ``k`` extrema about each end sample."""
    left = locs[:k]
    left_vals = vals[:k]
    keep = left > 0
    right = locs[::-1][:k]
    right_vals = vals[::-1][:k]
    keep_r = right < n - 1
    lx = -left[keep][::-1]
    rx = 2 * (n - 1) - right[keep_r]
    x = np.concatenate((lx, locs, rx)).astype(np.float64)
    y = np.concatenate((left_vals[keep][::-1], vals, right_vals[keep_r]))
    return x, y


def envelope_mean(h, mirror_extrema=2):
    """Mean of the upper and lower natural-spline envelopes, or None if undefined."""
    n = h.size
    maxima, minima = local_extrema(h)
    if maxima.size == 0 or minima.size == 0:
        return None
    t = np.arange(n, dtype=np.float64)
    ux, uy = _mirror(maxima, h[maxima], n, mirror_extrema)
    lx, ly = _mirror(minima, h[minima], n, mirror_extrema)
    if ux.size < 2 or lx.size < 2:
        return None
    upper = cubic_spline(ux, uy, t)
    lower = cubic_spline(lx, ly, t)
    return 0.5 * (upper + lower)


def sift(x, config: SiftConfig = SiftConfig()):
    """Extract one IMF candidate from ``x``; None if no envelope can be formed."""
    h = np.asarray(x, dtype=np.float64).copy()
    extracted = False
    for _ in range(config.max_sifts):
        m = envelope_mean(h, config.mirror_extrema)
        if m is None:
            break
        h_new = h - m
        denom = np.sum(h ** 2)
        sd = np.sum((h - h_new) ** 2) / denom if denom > 0 else 0.0
        h = h_new
        extracted = True
        if sd < config.sd_threshold and is_imf(h):
            break
    return h if extracted else None


def emd_decompose(channel, max_imfs: int, sift_config: SiftConfig = SiftConfig()) -> list[np.ndarray]:
    """Decompose ``channel`` into ``[IMF_1, ..., IMF_m, residue]`` with ``m <= max_imfs``.

    IMFs come out in sifting order (highest frequency first). Extraction stops
    early when the residue has fewer than ``sift_config.min_extrema`` local
    extrema, so a monotonic ramp yields just ``[ramp]``, or when the residue
    is negligible (see :class:`SiftConfig`). The residue is
    computed as ``x - sum(IMFs)``, which makes the sum identity exact up to
    rounding.
    """
    x = np.asarray(channel, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidSignal("emd_decompose expects a 1-D channel")
    if not np.all(np.isfinite(x)):
        raise InvalidSignal("channel contains NaN or Inf")
    if max_imfs < 0:
        raise ValueError("max_imfs must be >= 0")

    imfs = []
    residue = x.copy()
    floor = sift_config.residue_tol * np.linalg.norm(x)
    while (len(imfs) < max_imfs and count_extrema(residue) >= sift_config.min_extrema
           and not (imfs and np.linalg.norm(residue) < floor)):
        imf = sift(residue, sift_config)
        if imf is None:
            break
        imfs.append(imf)
        residue = residue - imf
    return imfs + [residue]
