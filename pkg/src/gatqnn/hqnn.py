"""Hybrid model: RX/CNOT circuit expectations followed by a softmax linear head.

Quantum gradients use the parameter-shift rule at the expectation level
(two circuit executions per slot, shifted by +/- pi/2) chained through the
analytic softmax / cross-entropy / linear-head Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .backend import BackendConfig, execute_vector
from .circuit import MicroCircuitSpec, SlotId
from .errors import EmptyDataset, LabelOutOfRange
from .pool import ModelParams

PROB_FLOOR = 1e-12
SHIFT = np.pi / 2


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 3
    learning_rate: float = 0.01
    batch_size: int = 32
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate < 0:
            raise ValueError(f"invalid training config {self}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainHistory:
    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)


@dataclass
class HybridModel:
    spec: MicroCircuitSpec
    angles: np.ndarray  # ordered like spec.slots
    head_weights: np.ndarray  # (C, n)
    head_bias: np.ndarray  # (C,)

    def __post_init__(self):
        self.angles = np.array(self.angles, dtype=float)
        self.head_weights = np.array(self.head_weights, dtype=float)
        self.head_bias = np.array(self.head_bias, dtype=float)
        if self.angles.shape != (len(self.spec.slots),):
            raise ValueError("one angle per slot required")
        if self.head_weights.shape != (self.n_classes, self.spec.n):
            raise ValueError(f"head weights {self.head_weights.shape} do not match {self.spec.n} qubits")

    @classmethod
    def from_params(cls, spec: MicroCircuitSpec, params: ModelParams) -> "HybridModel":
        if list(params.slots) != list(spec.slots):
            raise ValueError("parameter slots do not match the circuit")
        return cls(spec, params.angles, params.head_weights, params.head_bias)

    @property
    def n_classes(self) -> int:
        return len(self.head_bias)

    def angle_map(self) -> dict[SlotId, float]:
        return dict(zip(self.spec.slots, self.angles.tolist()))

    def to_params(self) -> ModelParams:
        return ModelParams(list(self.spec.slots), self.angles.copy(), self.head_weights.copy(), self.head_bias.copy())

    def copy(self) -> "HybridModel":
        return HybridModel(self.spec, self.angles.copy(), self.head_weights.copy(), self.head_bias.copy())


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def expectations(model: HybridModel, features, backend: BackendConfig, rng=None, angles=None) -> np.ndarray:
    thetas = model.angles if angles is None else angles
    return execute_vector(model.spec, features, thetas, backend, rng)


def forward(model: HybridModel, features, backend: BackendConfig, rng=None) -> np.ndarray:
    """Class probabilities ``softmax(W z + b)`` for one sample or a batch."""
    z = expectations(model, features, backend, rng)
    return softmax(z @ model.head_weights.T + model.head_bias)


def loss(p, label: int) -> float:
    p = np.asarray(p, dtype=float)
    if not 0 <= label < p.shape[-1]:
        raise LabelOutOfRange(f"label {label} outside [0, {p.shape[-1]})")
    return float(-np.log(max(p[label], PROB_FLOOR)))


def _check_labels(labels: np.ndarray, n_classes: int) -> None:
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise LabelOutOfRange(f"labels must lie in [0, {n_classes})")


def batch_gradients(model: HybridModel, X, y, backend: BackendConfig, rng=None):
    """Mean loss and mean gradients over a batch.

    Returns ``(loss, correct, d_angles, d_weights, d_bias)`` where ``correct``
    counts argmax hits of the unshifted forward pass.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=int))
    _check_labels(y, model.n_classes)
    z = expectations(model, X, backend, rng)
    p = softmax(z @ model.head_weights.T + model.head_bias)
    rows = np.arange(len(y))
    batch_loss = float(np.mean(-np.log(np.maximum(p[rows, y], PROB_FLOOR))))
    correct = int(np.sum(np.argmax(p, axis=1) == y))

    delta = p.copy()
    delta[rows, y] -= 1.0
    d_weights = delta.T @ z / len(y)
    d_bias = delta.mean(axis=0)
    dz = delta @ model.head_weights  # dloss/dz, (B, n)

    d_angles = np.zeros(len(model.angles))
    for k in range(len(model.angles)):
        shifted = model.angles.copy()
        shifted[k] += SHIFT
        z_plus = expectations(model, X, backend, rng, shifted)
        shifted[k] -= 2 * SHIFT
        z_minus = expectations(model, X, backend, rng, shifted)
        d_angles[k] = np.mean(np.sum(dz * (z_plus - z_minus) / 2.0, axis=1))
    return batch_loss, correct, d_angles, d_weights, d_bias


def grad_quantum(model: HybridModel, features, label: int, backend: BackendConfig, rng=None) -> dict[SlotId, float]:
    _, _, d_angles, _, _ = batch_gradients(model, features, label, backend, rng)
    return dict(zip(model.spec.slots, d_angles.tolist()))


def grad_head(model: HybridModel, features, label: int, backend: BackendConfig, rng=None):
    """``((p - onehot) z^T, p - onehot)`` for one sample."""
    X = np.atleast_2d(np.asarray(features, dtype=float))
    _check_labels(np.array([label]), model.n_classes)
    z = expectations(model, X, backend, rng)[0]
    p = softmax(z @ model.head_weights.T + model.head_bias)
    delta = p.copy()
    delta[label] -= 1.0
    return np.outer(delta, z), delta


class _Adam:
    def __init__(self, size, cfg: TrainConfig):
        self.cfg = cfg
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, grad):
        c = self.cfg
        self.t += 1
        self.m = c.beta1 * self.m + (1 - c.beta1) * grad
        self.v = c.beta2 * self.v + (1 - c.beta2) * grad**2
        m_hat = self.m / (1 - c.beta1**self.t)
        v_hat = self.v / (1 - c.beta2**self.t)
        return c.learning_rate * m_hat / (np.sqrt(v_hat) + c.eps)


def train(
    model: HybridModel,
    dataset,
    config: TrainConfig,
    backend: BackendConfig,
    rng: Optional[np.random.Generator] = None,
) -> tuple[HybridModel, TrainHistory]:
    """Mini-batch training; returns a new model and per-epoch loss/accuracy.

    ``rng`` drives shuffling and shot sampling; by default it is seeded from
    ``config.seed``. Epoch statistics come from the forward passes made while
    computing each batch gradient (i.e. before that batch's update).
    """
    X = np.asarray(dataset.features, dtype=float)
    y = np.asarray(dataset.labels, dtype=int)
    if len(y) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    model = model.copy()
    n_ang = len(model.angles)
    w_shape = model.head_weights.shape
    n_w = model.head_weights.size
    adam = _Adam(n_ang + n_w + len(model.head_bias), config) if config.optimizer == "adam" else None
    history = TrainHistory()

    for _ in range(config.epochs):
        order = rng.permutation(len(y))
        total_loss = 0.0
        total_correct = 0
        for start in range(0, len(y), config.batch_size):
            idx = order[start : start + config.batch_size]
            batch_loss, correct, d_ang, d_w, d_b = batch_gradients(model, X[idx], y[idx], backend, rng)
            total_loss += batch_loss * len(idx)
            total_correct += correct
            grad = np.concatenate([d_ang, d_w.ravel(), d_b])
            step = adam.step(grad) if adam is not None else config.learning_rate * grad
            model.angles = model.angles - step[:n_ang]
            model.head_weights = model.head_weights - step[n_ang : n_ang + n_w].reshape(w_shape)
            model.head_bias = model.head_bias - step[n_ang + n_w :]
        history.loss.append(total_loss / len(y))
        history.accuracy.append(total_correct / len(y))
    return model, history


def predict(model: HybridModel, features, backend: BackendConfig, rng=None) -> np.ndarray:
    return np.argmax(forward(model, np.atleast_2d(features), backend, rng), axis=1)


def evaluate(model: HybridModel, dataset, backend: BackendConfig, rng=None) -> float:
    """Argmax accuracy (ties resolve to the lowest class index)."""
    y = np.asarray(dataset.labels, dtype=int)
    if len(y) == 0:
        raise EmptyDataset("cannot evaluate on an empty dataset")
    return float(np.mean(predict(model, dataset.features, backend, rng) == y))
