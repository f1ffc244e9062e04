"""Ensembles of component trunks.

E1 averages the raw trunk scores, applies one softmax and trains all trunks
jointly on a shared loss. E2 trains every trunk on its own component and
averages the per-trunk probabilities (soft voting).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .decomposition import DecompositionConfig
from .errors import FormatError, ShapeError
from .network import (
    TARGET_EVAL,
    TRAIN,
    AdamState,
    Trunk,
    TrunkConfig,
    apply_adam,
    cross_entropy,
    cross_entropy_grad,
    softmax,
)

E1 = "e1"
E2 = "e2"
MODES = (E1, E2)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 50
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 2 or self.lr < 0:
            raise ValueError("need epochs >= 0, batch_size >= 2 and lr >= 0")

    def adam(self) -> AdamState:
        return AdamState(lr=self.lr, beta1=self.beta1, beta2=self.beta2)


@dataclass
class EnsembleModel:
    trunks: list
    mode: str
    decomposition: DecompositionConfig | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def n_components(self) -> int:
        return len(self.trunks)

    @classmethod
    def build(cls, n_components: int, n_channels: int, n_times: int, mode: str,
              trunk_config: TrunkConfig = TrunkConfig(), seed: int = 0,
              decomposition: DecompositionConfig | None = None) -> "EnsembleModel":
        trunks = [Trunk(n_channels, n_times, trunk_config, seed=seed + d) for d in range(n_components)]
        return cls(trunks, mode, decomposition)

    def predict_proba(self, stacks, phase: str = TARGET_EVAL) -> np.ndarray:
        if self.mode == E1:
            return e1_forward(self, stacks, phase)
        return e2_predict(self, stacks, phase)

    def predict(self, stacks, phase: str = TARGET_EVAL) -> np.ndarray:
        return predict_labels(self.predict_proba(stacks, phase))

    def save(self, directory):
        """Write ``manifest.json`` plus one checkpoint per trunk into ``directory``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        refs = []
        for d, trunk in enumerate(self.trunks):
            name = f"trunk_{d:02d}.npz"
            trunk.save(directory / name)
            refs.append(name)
        manifest = {
            "version": 1,
            "mode": self.mode,
            "decomposition": self.decomposition.to_dict() if self.decomposition else None,
            "trunks": refs,
        }
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    @classmethod
    def load(cls, directory) -> "EnsembleModel":
        directory = Path(directory)
        try:
            manifest = json.loads((directory / "manifest.json").read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"{directory}: unreadable ensemble manifest ({exc})") from exc
        dec = manifest.get("decomposition")
        trunks = [Trunk.load(directory / ref) for ref in manifest["trunks"]]
        return cls(trunks, manifest["mode"], DecompositionConfig.from_dict(dec) if dec else None)


def predict_labels(probabilities) -> np.ndarray:
    """Argmax over (alert, fatigue); exact ties go to alert (0)."""
    p = np.asarray(probabilities)
    return (p[:, 1] > p[:, 0]).astype(np.int64)


def _check_stacks(model, stacks):
    stacks = np.asarray(stacks, dtype=np.float64)
    if stacks.ndim != 4 or stacks.shape[1] != model.n_components:
        raise ShapeError(f"expected stacks (K, {model.n_components}, C, T), got {stacks.shape}")
    return stacks


def _order_free_mean(values) -> np.ndarray:
    """Mean over axis 0 that is bit-identical under any permutation of that axis.

    Summing the per-element sorted values fixes the floating-point
    accumulation order.
    """
    v = np.sort(np.asarray(values), axis=0)
    total = v[0].copy()
    for row in v[1:]:
        total += row
    return total / v.shape[0]


def e1_scores(model: EnsembleModel, stacks, phase: str) -> np.ndarray:
    stacks = _check_stacks(model, stacks)
    return _order_free_mean([t.forward(stacks[:, d], phase) for d, t in enumerate(model.trunks)])


def e1_forward(model: EnsembleModel, stacks, phase: str = TARGET_EVAL) -> np.ndarray:
    """Softmax of the trunk-averaged scores, shape (K, 2)."""
    return softmax(e1_scores(model, stacks, phase))


def e1_loss_and_grads(model: EnsembleModel, stacks, labels):
    """Joint loss and per-trunk gradients for one synchronized minibatch."""
    scores = e1_scores(model, stacks, TRAIN)
    probs = softmax(scores)
    loss = cross_entropy(probs, labels)
    d_avg = cross_entropy_grad(probs, labels) / model.n_components
    grads = [t.backward(d_avg) for t in model.trunks]
    return loss, grads


def e1_train_step(model: EnsembleModel, stacks, labels, optimizer_states) -> float:
    """One joint update of every trunk; returns the pre-update loss."""
    loss, grads = e1_loss_and_grads(model, stacks, labels)
    for trunk, g, state in zip(model.trunks, grads, optimizer_states):
        apply_adam(trunk, g, state)
    return loss


def e2_predict(model: EnsembleModel, stacks, phase: str = TARGET_EVAL) -> np.ndarray:
    """Soft vote: mean of the per-trunk softmax outputs, shape (K, 2)."""
    return _order_free_mean(trunk_probabilities(model, stacks, phase))


def trunk_probabilities(model: EnsembleModel, stacks, phase: str = TARGET_EVAL) -> np.ndarray:
    """Per-trunk probabilities, shape (D, K, 2)."""
    stacks = _check_stacks(model, stacks)
    return np.stack([softmax(t.forward(stacks[:, d], phase)) for d, t in enumerate(model.trunks)])


def minibatches(n: int, batch_size: int, rng) -> list:
    """Shuffled index batches; a trailing singleton is folded into the previous batch."""
    perm = rng.permutation(n)
    batches = [perm[i:i + batch_size] for i in range(0, n, batch_size)]
    if len(batches) > 1 and batches[-1].size < 2:
        last = batches.pop()
        batches[-1] = np.concatenate((batches[-1], last))
    return batches


def train_trunk(trunk: Trunk, x, labels, config: TrainConfig, rng, history=None) -> Trunk:
    """Plain minibatch Adam training of a single trunk on (N, C, T) inputs."""
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    state = config.adam()
    for _ in range(config.epochs):
        losses = []
        for idx in minibatches(len(labels), config.batch_size, rng):
            probs = softmax(trunk.forward(x[idx], TRAIN))
            losses.append(cross_entropy(probs, labels[idx]))
            apply_adam(trunk, trunk.backward(cross_entropy_grad(probs, labels[idx])), state)
        if history is not None:
            history.append(float(np.mean(losses)))
    return trunk


def e2_train(model: EnsembleModel, stacks, labels, config: TrainConfig = TrainConfig(),
             order=None) -> EnsembleModel:
    """Train each trunk on its own component only.

    Each trunk shuffles with its own generator seeded from ``(seed, d)``, so
    the result does not depend on ``order``.
    """
    if model.mode != E2:
        raise ValueError("e2_train needs an E2 model")
    stacks = _check_stacks(model, stacks)
    order = range(model.n_components) if order is None else order
    for d in order:
        rng = np.random.default_rng([config.seed, d])
        train_trunk(model.trunks[d], stacks[:, d], labels, config, rng)
    return model


def e1_train(model: EnsembleModel, stacks, labels, config: TrainConfig = TrainConfig(),
             history=None) -> EnsembleModel:
    """Joint training on minibatches that share sample indices across components."""
    if model.mode != E1:
        raise ValueError("e1_train needs an E1 model")
    stacks = _check_stacks(model, stacks)
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng([config.seed, 10 ** 6])
    states = [config.adam() for _ in model.trunks]
    for _ in range(config.epochs):
        losses = [e1_train_step(model, stacks[idx], labels[idx], states)
                  for idx in minibatches(len(labels), config.batch_size, rng)]
        if history is not None:
            history.append(float(np.mean(losses)))
    return model


def train_ensemble(model: EnsembleModel, stacks, labels, config: TrainConfig = TrainConfig()):
    if model.mode == E1:
        return e1_train(model, stacks, labels, config)
    return e2_train(model, stacks, labels, config)
