"""Channel-wise decomposition of epochs into uniform component stacks."""
from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..core import Epoch, EpochSet
from ..errors import ClampWarning, ShapeError
from .dwt import dwt_decompose, max_levels
from .emd import SiftConfig, emd_decompose
from .ewt import ewt_decompose
from .vmd import vmd_decompose

METHODS = ("dwt", "emd", "ewt", "vmd")

# Component counts used per method on the 30 x 384 driving data.
DEFAULT_COMPONENTS = {"vmd": 10, "emd": 4, "ewt": 10, "dwt": 6}

DEFAULT_PARAMS = {
    "dwt": {"wavelet": "db4"},
    "emd": {"sd_threshold": 0.2, "max_sifts": 100},
    "ewt": {"gamma": 0.1, "smooth": 5},
    "vmd": {"alpha": 2000.0, "tau": 0.0, "tol": 1e-7, "max_iter": 500},
}


@dataclass(frozen=True)
class DecompositionConfig:
    method: str
    n_components: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        method = self.method.lower()
        if method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        object.__setattr__(self, "method", method)
        if not 1 <= int(self.n_components) <= 16:
            raise ValueError(f"n_components must be in [1, 16], got {self.n_components}")
        unknown = set(self.params) - set(DEFAULT_PARAMS[method])
        if unknown:
            raise ValueError(f"unknown {method} parameters: {sorted(unknown)}")
        merged = {**DEFAULT_PARAMS[method], **self.params}
        if method == "ewt" and not 0 < merged["gamma"] < 0.5:
            raise ValueError("ewt gamma must lie in (0, 0.5)")
        if method == "vmd" and merged["alpha"] <= 0:
            raise ValueError("vmd alpha must be positive")
        object.__setattr__(self, "params", merged)

    def to_dict(self) -> dict:
        return {"method": self.method, "n_components": int(self.n_components),
                "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d) -> "DecompositionConfig":
        return cls(d["method"], int(d["n_components"]), dict(d.get("params", {})))


@dataclass
class ComponentStack:
    """D component matrices of shape (C, T) for one epoch.

    Ordering is ascending frequency for DWT, EWT and VMD and sifting order
    (high to low frequency, residue last) for EMD.
    """

    components: np.ndarray  # (D, C, T)
    method: str
    requested: int
    clamped: bool = False

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def source_shape(self):
        return self.components.shape[1:]


def decompose_channel(x, config: DecompositionConfig, sample_rate_hz: float = 1.0) -> list:
    """Apply the configured method to one channel."""
    p = config.params
    d = config.n_components
    if config.method == "dwt":
        if d == 1:
            return [np.asarray(x, dtype=np.float64).copy()]
        return dwt_decompose(x, d - 1, p["wavelet"])
    if config.method == "emd":
        sc = SiftConfig(sd_threshold=p["sd_threshold"], max_sifts=p["max_sifts"])
        return emd_decompose(x, d - 1, sc)
    if config.method == "ewt":
        return ewt_decompose(x, d, gamma=p["gamma"], smooth=p["smooth"])
    modes, _ = vmd_decompose(x, d, alpha=p["alpha"], tau=p["tau"], tol=p["tol"],
                             max_iter=p["max_iter"], sample_rate_hz=sample_rate_hz)
    return modes


def merge_to(components, d: int) -> list:
    """Fold every component past index ``d - 1`` into component ``d - 1``."""
    if len(components) <= d:
        return list(components)
    head = list(components[: d - 1])
    head.append(np.sum(components[d - 1:], axis=0))
    return head


def max_components(method: str, n_samples: int, wavelet: str = "db4"):
    """Method-imposed upper bound on D, or None when only the data decides."""
    if method == "dwt":
        return max_levels(n_samples, wavelet) + 1
    return None


def decompose_epoch(epoch: Epoch, config: DecompositionConfig, n_components: int | None = None
                    ) -> ComponentStack:
    """Decompose each channel independently and stack by component index.

    When channels yield different counts, the stack keeps the smallest count
    and merges the surplus components by summation (see :func:`merge_to`).
    Passing ``n_components`` forces that stack length instead; it must not
    exceed the smallest per-channel count.
    """
    data = epoch.data if isinstance(epoch, Epoch) else np.asarray(epoch, dtype=np.float64)
    rate = epoch.sample_rate_hz if isinstance(epoch, Epoch) else 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        per_channel = [decompose_channel(ch, config, rate) for ch in data]
    counts = [len(c) for c in per_channel]
    d = min(counts)
    if n_components is not None:
        if n_components > d:
            raise ShapeError(f"cannot stack {n_components} components; a channel produced only {d}")
        d = n_components
    stacked = np.stack([np.stack(merge_to(c, d)) for c in per_channel], axis=1)
    return ComponentStack(stacked, config.method, config.n_components,
                          clamped=d < config.n_components)


def _decompose_one(args):
    data, config, rate = args
    return decompose_epoch(Epoch(data, rate, 0), config)


def decompose_epochs(epochs: EpochSet, config: DecompositionConfig, workers: int = 1):
    """Decompose every epoch of a set into one array of shape (N, D, C, T).

    D is the minimum over all epochs so that every trunk sees the same
    component index across samples.

    Returns
    -------
    stacks : ndarray, shape (N, D, C, T)
    info : dict
        ``requested``, ``effective`` and ``clamped``.
    """
    jobs = [(epochs.data[i], config, epochs.sample_rate_hz) for i in range(len(epochs))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_decompose_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_decompose_one(j) for j in jobs]
    d = min(r.n_components for r in results)
    out = np.stack([np.stack(merge_to(list(r.components), d)) for r in results])
    return out, {"requested": config.n_components, "effective": d,
                 "clamped": d < config.n_components}
