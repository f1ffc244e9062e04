"""Signal containers, FFT helpers and spline interpolation.

Everything in the decomposition core runs in float64. The FFT convention is
unnormalized forward, ``1/T`` inverse (numpy's default).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    DegenerateKnots,
    InsufficientKnots,
    InvalidSignal,
    NonRealResult,
    ShapeError,
)

ALERT = 0
FATIGUE = 1
UNLABELED = -1

LABEL_NAMES = {ALERT: "alert", FATIGUE: "fatigue", UNLABELED: "unlabeled"}


def _check_finite(x, what="signal"):
    if not np.all(np.isfinite(x)):
        raise InvalidSignal(f"{what} contains NaN or Inf")


@dataclass(frozen=True)
class Epoch:
    """One multichannel EEG segment of shape (channels, time)."""

    data: np.ndarray
    sample_rate_hz: float
    subject_id: int
    label: int = UNLABELED

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ShapeError(f"epoch data must be 2-D (C, T), got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 2:
            raise ShapeError(f"epoch needs C >= 1 and T >= 2, got {data.shape}")
        _check_finite(data, "epoch data")
        if not self.sample_rate_hz > 0:
            raise InvalidSignal("sample_rate_hz must be positive")
        if self.label not in LABEL_NAMES:
            raise ValueError(f"label must be one of {sorted(LABEL_NAMES)}, got {self.label}")
        object.__setattr__(self, "data", data)

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_times(self) -> int:
        return self.data.shape[1]


@dataclass
class EpochSet:
    """A batch of equally shaped epochs stored as one (N, C, T) array.

    ``labels`` uses 0 for alert, 1 for fatigue and -1 for unlabeled epochs.
    """

    data: np.ndarray
    subjects: np.ndarray
    labels: np.ndarray
    sample_rate_hz: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.subjects = np.asarray(self.subjects, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.data.ndim != 3:
            raise ShapeError(f"EpochSet data must be (N, C, T), got {self.data.shape}")
        n = self.data.shape[0]
        if self.subjects.shape != (n,) or self.labels.shape != (n,):
            raise ShapeError("subjects and labels must have one entry per epoch")
        if n and (self.data.shape[1] < 1 or self.data.shape[2] < 2):
            raise ShapeError(f"epochs need C >= 1 and T >= 2, got {self.data.shape[1:]}")
        _check_finite(self.data, "epoch data")
        if not self.sample_rate_hz > 0:
            raise InvalidSignal("sample_rate_hz must be positive")

    @classmethod
    def from_epochs(cls, epochs: Sequence[Epoch]) -> "EpochSet":
        if not epochs:
            raise ShapeError("cannot build an EpochSet from zero epochs")
        shape = epochs[0].data.shape
        rate = epochs[0].sample_rate_hz
        for i, ep in enumerate(epochs):
            if ep.data.shape != shape:
                raise ShapeError(f"epoch {i} has shape {ep.data.shape}, expected {shape}")
            if ep.sample_rate_hz != rate:
                raise ShapeError(f"epoch {i} has sample rate {ep.sample_rate_hz}, expected {rate}")
        return cls(
            data=np.stack([ep.data for ep in epochs]),
            subjects=np.array([ep.subject_id for ep in epochs]),
            labels=np.array([ep.label for ep in epochs]),
            sample_rate_hz=rate,
        )

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, i: int) -> Epoch:
        return Epoch(self.data[i], self.sample_rate_hz, int(self.subjects[i]), int(self.labels[i]))

    def __iter__(self) -> Iterator[Epoch]:
        for i in range(len(self)):
            yield self[i]

    @property
    def shape(self):
        """Uniform (C, T, sample_rate) of every epoch."""
        return self.data.shape[1], self.data.shape[2], self.sample_rate_hz

    def subset(self, index) -> "EpochSet":
        return EpochSet(
            self.data[index], self.subjects[index], self.labels[index],
            self.sample_rate_hz, dict(self.meta),
        )

    def subject_ids(self) -> list[int]:
        """Distinct subject IDs in order of first appearance."""
        _, first = np.unique(self.subjects, return_index=True)
        return [int(self.subjects[i]) for i in sorted(first)]


@dataclass(frozen=True)
class Spectrum:
    """Full-length complex FFT of a real signal."""

    bins: np.ndarray
    sample_rate_hz: float = 1.0

    def __len__(self):
        return self.bins.shape[-1]

    def frequency(self, k):
        """Frequency in Hz of bin ``k`` (``k * rate / T``)."""
        return np.asarray(k) * self.sample_rate_hz / len(self)

    @property
    def frequencies(self) -> np.ndarray:
        return self.frequency(np.arange(len(self)))


def fft(signal, sample_rate_hz: float = 1.0) -> Spectrum:
    """Unnormalized DFT of a real signal of any length >= 2."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise InvalidSignal("fft expects a 1-D signal with at least 2 samples")
    _check_finite(x)
    return Spectrum(np.fft.fft(x), sample_rate_hz)


def ifft(spectrum, rtol: float = 1e-6) -> np.ndarray:
    """Inverse of :func:`fft`, returning the real part.

    Raises NonRealResult if the imaginary residue exceeds ``rtol`` relative to
    the real part, i.e. the spectrum was not conjugate symmetric.
    """
    bins = spectrum.bins if isinstance(spectrum, Spectrum) else np.asarray(spectrum)
    x = np.fft.ifft(bins)
    scale = np.max(np.abs(x.real)) if x.size else 0.0
    resid = np.max(np.abs(x.imag)) if x.size else 0.0
    if resid > rtol * max(scale, np.finfo(float).tiny) and resid > 0:
        raise NonRealResult(f"imaginary residue {resid:.3g} exceeds {rtol:g} relative magnitude")
    return x.real.copy()


def cubic_spline(knots_x, knots_y, query_x) -> np.ndarray:
    """Natural cubic spline through ``(knots_x, knots_y)`` evaluated at ``query_x``."""
    kx = np.asarray(knots_x, dtype=np.float64)
    ky = np.asarray(knots_y, dtype=np.float64)
    q = np.asarray(query_x, dtype=np.float64)
    if kx.size < 2:
        raise InsufficientKnots(f"need at least 2 knots, got {kx.size}")
    if kx.shape != ky.shape:
        raise ShapeError("knots_x and knots_y differ in length")
    d = np.diff(kx)
    if np.any(d == 0):
        raise DegenerateKnots("duplicate knot abscissae")
    if np.any(d < 0):
        raise DegenerateKnots("knots_x must be strictly increasing")
    if kx.size == 2:
        return np.interp(q, kx, ky)
    return CubicSpline(kx, ky, bc_type="natural")(q)


def relative_l2(estimate, reference) -> float:
    """``||estimate - reference|| / ||reference||`` (absolute error if the reference is zero)."""
    estimate = np.asarray(estimate, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    err = np.linalg.norm(estimate - reference)
    ref = np.linalg.norm(reference)
    return float(err / ref) if ref > 0 else float(err)
