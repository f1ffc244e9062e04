"""Compact convolutional trunk with component-specific batch normalization.

A trunk maps one component batch ``(K, C, T)`` to two class scores through

    spatial conv (1 x C) -> CSBN -> act -> temporal conv (k_t, stride s)
    -> CSBN -> act -> average pool -> fully connected (2 outputs)

Forward and backward passes are written out in numpy and run in float64.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BatchTooSmall, FormatError, NonFiniteGradient, ShapeError, StaleState

TRAIN = "train"
SOURCE_EVAL = "source-eval"
TARGET_EVAL = "target-eval"
PHASES = (TRAIN, SOURCE_EVAL, TARGET_EVAL)

CHECKPOINT_VERSION = 1


# ---------------------------------------------------------------------------
# CSBN
# ---------------------------------------------------------------------------

@dataclass
class CsbnState:
    """Affine parameters and running statistics of one CSBN layer."""

    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float = 1e-8
    momentum: float = 0.1

    @classmethod
    def fresh(cls, n_maps: int, eps: float = 1e-8, momentum: float = 0.1) -> "CsbnState":
        return cls(np.ones(n_maps), np.zeros(n_maps), np.zeros(n_maps), np.ones(n_maps),
                   eps, momentum)


def _bcast(v, ndim):
    return v.reshape((1, -1) + (1,) * (ndim - 2))


def csbn_normalize(features, state: CsbnState, phase: str, return_cache: bool = False):
    """Standardize per feature map, then apply ``gamma * h_hat + beta``.

    ``train`` and ``target-eval`` use the statistics of ``features`` itself,
    pooled over the batch and all spatial/temporal positions; ``train`` also
    moves the running statistics toward them. ``source-eval`` uses the running
    statistics.
    """
    h = np.asarray(features, dtype=np.float64)
    if h.ndim < 2:
        raise ShapeError("features must be (K, maps, ...)")
    if h.shape[1] != state.gamma.size:
        raise ShapeError(f"expected {state.gamma.size} feature maps, got {h.shape[1]}")
    if phase not in PHASES:
        raise ValueError(f"unknown phase {phase!r}")
    axes = (0,) + tuple(range(2, h.ndim))
    if phase == SOURCE_EVAL:
        mu, var = state.running_mean, state.running_var
    else:
        if h.shape[0] < 2:
            raise BatchTooSmall(f"phase {phase!r} needs at least 2 samples, got {h.shape[0]}")
        mu = h.mean(axis=axes)
        var = h.var(axis=axes)
        if phase == TRAIN:
            m = state.momentum
            state.running_mean = (1 - m) * state.running_mean + m * mu
            state.running_var = (1 - m) * state.running_var + m * var
    inv_std = 1.0 / np.sqrt(var + state.eps)
    h_hat = (h - _bcast(mu, h.ndim)) * _bcast(inv_std, h.ndim)
    out = _bcast(state.gamma, h.ndim) * h_hat + _bcast(state.beta, h.ndim)
    if return_cache:
        return out, (h_hat, inv_std, axes)
    return out


def csbn_backward(dout, cache, state: CsbnState):
    """Gradients through batch-statistics standardization.

    Returns ``(d_features, d_gamma, d_beta)``.
    """
    h_hat, inv_std, axes = cache
    nd = dout.ndim
    n = dout.size // dout.shape[1]
    d_gamma = np.sum(dout * h_hat, axis=axes)
    d_beta = np.sum(dout, axis=axes)
    d_hat = dout * _bcast(state.gamma, nd)
    s1 = _bcast(np.sum(d_hat, axis=axes), nd)
    s2 = _bcast(np.sum(d_hat * h_hat, axis=axes), nd)
    dx = _bcast(inv_std, nd) / n * (n * d_hat - s1 - h_hat * s2)
    return dx, d_gamma, d_beta


# ---------------------------------------------------------------------------
# Output layer
# ---------------------------------------------------------------------------

def softmax(scores) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    z = s - s.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probabilities, labels) -> float:
    """Mean of ``-log p[label]`` with p clamped to at least 1e-12."""
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    picked = p[np.arange(y.size), y]
    return float(np.mean(-np.log(np.maximum(picked, 1e-12))))


def cross_entropy_grad(probabilities, labels) -> np.ndarray:
    """Gradient of the mean cross-entropy with respect to pre-softmax scores."""
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    g = p.copy()
    g[np.arange(y.size), y] -= 1.0
    return g / y.size


# ---------------------------------------------------------------------------
# Trunk
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrunkConfig:
    n_spatial: int = 8
    n_temporal: int = 8
    kernel: int = 16
    stride: int = 8
    pool: int = 4
    activation: str = "relu"
    eps: float = 1e-8
    momentum: float = 0.1
    min_target_batch: int = 8

    def __post_init__(self):
        if self.activation not in ("relu", "elu"):
            raise ValueError("activation must be 'relu' or 'elu'")
        for name in ("n_spatial", "n_temporal", "kernel", "stride", "pool"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def _act(x, kind):
    if kind == "relu":
        return np.maximum(x, 0.0)
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def _act_grad(x, kind):
    if kind == "relu":
        return (x > 0).astype(np.float64)
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


PARAM_NAMES = ("spatial_w", "spatial_b", "bn1_gamma", "bn1_beta", "temporal_w", "temporal_b",
               "bn2_gamma", "bn2_beta", "fc_w", "fc_b")


class Trunk:
    """One component-specific classifier.

    Parameters
    ----------
    n_channels, n_times : int
        Shape of the component matrices this trunk consumes.
    config : TrunkConfig
    seed : int
        Seed for the Glorot-uniform weight initialization.
    """

    def __init__(self, n_channels: int, n_times: int, config: TrunkConfig = TrunkConfig(),
                 seed: int = 0):
        cfg = config
        if n_times < cfg.kernel:
            raise ShapeError(f"T={n_times} shorter than temporal kernel {cfg.kernel}")
        self.n_channels = int(n_channels)
        self.n_times = int(n_times)
        self.config = cfg
        self.seed = int(seed)
        self.n_steps = (self.n_times - cfg.kernel) // cfg.stride + 1
        self.n_pooled = self.n_steps // cfg.pool
        if self.n_pooled < 1:
            raise ShapeError("pool window longer than the temporal feature map")
        self.n_flat = cfg.n_temporal * self.n_pooled

        rng = np.random.default_rng(self.seed)

        def glorot(shape, fan_in, fan_out):
            lim = math.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-lim, lim, size=shape)

        f1, f2, k = cfg.n_spatial, cfg.n_temporal, cfg.kernel
        self.params = {
            "spatial_w": glorot((f1, self.n_channels), self.n_channels, f1),
            "spatial_b": np.zeros(f1),
            "temporal_w": glorot((f2, f1, k), f1 * k, f2 * k),
            "temporal_b": np.zeros(f2),
            "fc_w": glorot((2, self.n_flat), self.n_flat, 2),
            "fc_b": np.zeros(2),
        }
        self.bn1 = CsbnState.fresh(f1, cfg.eps, cfg.momentum)
        self.bn2 = CsbnState.fresh(f2, cfg.eps, cfg.momentum)
        self._cache = None
        self.used_fallback = False
        self._window = cfg.stride * np.arange(self.n_steps)[:, None] + np.arange(k)[None, :]

    # the CSBN affine parameters live in the state objects; expose them as params too
    def parameters(self) -> dict:
        p = dict(self.params)
        p["bn1_gamma"], p["bn1_beta"] = self.bn1.gamma, self.bn1.beta
        p["bn2_gamma"], p["bn2_beta"] = self.bn2.gamma, self.bn2.beta
        return {name: p[name] for name in PARAM_NAMES}

    def set_parameters(self, values: dict):
        for name, v in values.items():
            v = np.array(v, dtype=np.float64)
            if name.startswith("bn"):
                state = self.bn1 if name.startswith("bn1") else self.bn2
                setattr(state, name.split("_", 1)[1], v)
            else:
                self.params[name] = v

    def forward(self, x, phase: str = SOURCE_EVAL) -> np.ndarray:
        """Scores of shape (K, 2) for a batch of shape (K, C, T)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[1:] != (self.n_channels, self.n_times):
            raise ShapeError(f"expected batch (K, {self.n_channels}, {self.n_times}), got {x.shape}")
        if phase not in PHASES:
            raise ValueError(f"unknown phase {phase!r}")
        if phase == TRAIN and x.shape[0] < 2:
            raise BatchTooSmall("training needs at least 2 samples per batch")
        self.used_fallback = False
        if phase == TARGET_EVAL and x.shape[0] < self.config.min_target_batch:
            phase = SOURCE_EVAL
            self.used_fallback = True

        p, act = self.params, self.config.activation
        z1 = np.einsum("fc,kct->kft", p["spatial_w"], x) + p["spatial_b"][None, :, None]
        n1, c1 = csbn_normalize(z1, self.bn1, phase, return_cache=True)
        a1 = _act(n1, act)
        win = a1[:, :, self._window]                      # (K, F1, steps, k)
        z2 = np.einsum("kfjl,gfl->kgj", win, p["temporal_w"]) + p["temporal_b"][None, :, None]
        n2, c2 = csbn_normalize(z2, self.bn2, phase, return_cache=True)
        a2 = _act(n2, act)
        k, f2 = x.shape[0], self.config.n_temporal
        used = self.n_pooled * self.config.pool
        pooled = a2[:, :, :used].reshape(k, f2, self.n_pooled, self.config.pool).mean(axis=-1)
        flat = pooled.reshape(k, -1)
        scores = flat @ p["fc_w"].T + p["fc_b"]
        self._cache = (x, n1, c1, win, n2, c2, flat) if phase == TRAIN else None
        return scores

    def backward(self, d_scores) -> dict:
        """Gradients of every parameter given dLoss/dScores from the last train-phase forward."""
        if self._cache is None:
            raise StaleState("backward needs a preceding train-phase forward pass")
        x, n1, c1, win, n2, c2, flat = self._cache
        self._cache = None
        d_scores = np.asarray(d_scores, dtype=np.float64)
        p, act, cfg = self.params, self.config.activation, self.config
        k = x.shape[0]

        g = {"fc_w": d_scores.T @ flat, "fc_b": d_scores.sum(axis=0)}
        d_pooled = (d_scores @ p["fc_w"]).reshape(k, cfg.n_temporal, self.n_pooled)
        d_a2 = np.zeros((k, cfg.n_temporal, self.n_steps))
        used = self.n_pooled * cfg.pool
        d_a2[:, :, :used] = np.repeat(d_pooled, cfg.pool, axis=-1) / cfg.pool
        d_n2 = d_a2 * _act_grad(n2, act)
        d_z2, g["bn2_gamma"], g["bn2_beta"] = csbn_backward(d_n2, c2, self.bn2)

        g["temporal_b"] = d_z2.sum(axis=(0, 2))
        g["temporal_w"] = np.einsum("kgj,kfjl->gfl", d_z2, win)
        d_win = np.einsum("kgj,gfl->kfjl", d_z2, p["temporal_w"])
        d_a1 = np.zeros_like(n1)
        np.add.at(d_a1, (slice(None), slice(None), self._window), d_win)
        d_n1 = d_a1 * _act_grad(n1, act)
        d_z1, g["bn1_gamma"], g["bn1_beta"] = csbn_backward(d_n1, c1, self.bn1)

        g["spatial_b"] = d_z1.sum(axis=(0, 2))
        g["spatial_w"] = np.einsum("kft,kct->fc", d_z1, x)
        return {name: g[name] for name in PARAM_NAMES}

    def predict_proba(self, x, phase: str = TARGET_EVAL) -> np.ndarray:
        return softmax(self.forward(x, phase))

    # -- persistence --------------------------------------------------------

    def state_arrays(self) -> dict:
        arrays = {k: v.copy() for k, v in self.parameters().items()}
        arrays["bn1_running_mean"] = self.bn1.running_mean.copy()
        arrays["bn1_running_var"] = self.bn1.running_var.copy()
        arrays["bn2_running_mean"] = self.bn2.running_mean.copy()
        arrays["bn2_running_var"] = self.bn2.running_var.copy()
        return arrays

    def meta(self) -> dict:
        return {"version": CHECKPOINT_VERSION, "n_channels": self.n_channels,
                "n_times": self.n_times, "seed": self.seed, "config": asdict(self.config)}

    def save(self, path):
        """Write weights, CSBN statistics, architecture and seed to an ``.npz`` file."""
        arrays = self.state_arrays()
        arrays["__meta__"] = np.array(json.dumps(self.meta(), sort_keys=True))
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path) -> "Trunk":
        with np.load(path, allow_pickle=False) as z:
            if "__meta__" not in z.files:
                raise FormatError(f"{path}: missing checkpoint metadata")
            meta = json.loads(str(z["__meta__"]))
            if meta.get("version") != CHECKPOINT_VERSION:
                raise FormatError(f"{path}: unsupported checkpoint version {meta.get('version')}")
            trunk = cls(meta["n_channels"], meta["n_times"], TrunkConfig(**meta["config"]),
                        seed=meta["seed"])
            trunk.set_parameters({n: z[n] for n in PARAM_NAMES})
            trunk.bn1.running_mean = z["bn1_running_mean"].copy()
            trunk.bn1.running_var = z["bn1_running_var"].copy()
            trunk.bn2.running_mean = z["bn2_running_mean"].copy()
            trunk.bn2.running_var = z["bn2_running_var"].copy()
        return trunk


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState) -> dict:
    """Bias-corrected Adam update of ``params`` in place; returns ``params``."""
    for name, g in grads.items():
        if name not in params or np.shape(params[name]) != np.shape(g):
            raise ShapeError(f"gradient {name!r} does not match its parameter")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient for {name!r}")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for name, g in grads.items():
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(g)
            v = np.zeros_like(g)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name], state.v[name] = m, v
        params[name] -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


def apply_adam(trunk: Trunk, grads: dict, state: AdamState):
    """Adam step on a trunk, including the CSBN affine parameters."""
    params = trunk.parameters()
    adam_step(params, grads, state)
    trunk.set_parameters(params)
