"""Periodogram band-power features (delta, theta, alpha, beta)."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .core import Epoch, EpochSet
from .errors import BandOutOfRange

BANDS = (("delta", 1.0, 4.0), ("theta", 4.0, 8.0), ("alpha", 8.0, 12.0), ("beta", 12.0, 30.0))


@dataclass(frozen=True)
class BandPowerVector:
    values: np.ndarray  # band-major: all channels of delta, then theta, ...
    n_channels: int

    @property
    def band_edges(self):
        return {name: (lo, hi) for name, lo, hi in BANDS}

    def band(self, name: str) -> np.ndarray:
        i = [b[0] for b in BANDS].index(name)
        return self.values[i * self.n_channels:(i + 1) * self.n_channels]


def band_powers(data, sample_rate_hz: float) -> np.ndarray:
    """Band powers for data of shape (..., C, T), returned as (..., 4 * C).

    Power in ``[lo, hi)`` is ``2 * sum |X_k|^2 / T^2`` over positive-frequency
    bins, using a plain rectangular-window periodogram.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[-1]
    if sample_rate_hz / 2.0 < BANDS[-1][2]:
        raise BandOutOfRange(f"Nyquist {sample_rate_hz / 2:g} Hz is below {BANDS[-1][2]:g} Hz")
    spec = np.fft.rfft(data, axis=-1)
    power = 2.0 * np.abs(spec) ** 2 / n ** 2
    freqs = np.arange(spec.shape[-1]) * sample_rate_hz / n
    out = [power[..., (freqs >= lo) & (freqs < hi)].sum(axis=-1) for _, lo, hi in BANDS]
    return np.concatenate(out, axis=-1)


def psd_features(epoch: Epoch) -> BandPowerVector:
    return BandPowerVector(band_powers(epoch.data, epoch.sample_rate_hz), epoch.n_channels)


def feature_matrix(epochs: EpochSet) -> np.ndarray:
    """(N, 4C) band-power matrix for a whole set."""
    return band_powers(epochs.data, epochs.sample_rate_hz)


def feature_names(n_channels: int) -> list[str]:
    return [f"{name}_ch{c}" for name, _, _ in BANDS for c in range(n_channels)]


def write_feature_csv(path, epochs: EpochSet, meta: dict | None = None):
    """One row per epoch: subject, label, then every band/channel power."""
    feats = feature_matrix(epochs)
    with open(path, "w", newline="") as fh:
        if meta:
            fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(["subject", "label"] + feature_names(epochs.data.shape[1]))
        for s, lab, row in zip(epochs.subjects, epochs.labels, feats):
            w.writerow([int(s), int(lab)] + [repr(float(v)) for v in row])
