"""Plateau-aware extremum detection and zero-crossing counts."""
import numpy as np


def _runs(x):
    """Start/end (inclusive) of maximal runs of equal values."""
    change = np.flatnonzero(np.diff(x) != 0)
    starts = np.concatenate(([0], change + 1))
    ends = np.concatenate((change, [x.size - 1]))
    return starts, ends


def local_extrema(x, include_edges=False):
    """Indices of local maxima and minima.

    A flat run of equal samples counts as one extremum located at its
    midpoint (lower middle for even-length runs). With ``include_edges`` the
    first/last run counts when it is strictly above (below) its only
    neighbour.

    Returns
    -------
    (maxima, minima) : tuple of int ndarrays
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        return np.array([], dtype=int), np.array([], dtype=int)
    starts, ends = _runs(x)
    vals = x[starts]
    mid = (starts + ends) // 2
    nr = vals.size
    if nr < 2:
        return np.array([], dtype=int), np.array([], dtype=int)

    left = np.empty(nr)
    right = np.empty(nr)
    left[1:] = vals[:-1]
    right[:-1] = vals[1:]
    # sentinels make edge runs extrema only when include_edges is set
    left[0] = -np.inf if include_edges else np.inf
    right[-1] = -np.inf if include_edges else np.inf
    is_max = (vals > left) & (vals > right)

    left[0] = np.inf if include_edges else -np.inf
    right[-1] = np.inf if include_edges else -np.inf
    is_min = (vals < left) & (vals < right)
    return mid[is_max], mid[is_min]


def count_extrema(x) -> int:
    mx, mn = local_extrema(x)
    return mx.size + mn.size


def count_zero_crossings(x) -> int:
    s = np.sign(np.asarray(x, dtype=np.float64))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))
