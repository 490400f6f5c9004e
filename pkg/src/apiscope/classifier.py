"""Binary relevance classifier: two fully connected layers, trained from scratch.

forward(v) = sigmoid(W2 . relu(W1 . v + b1) + b2).  Training is plain
mini-batch SGD on binary cross-entropy for a fixed number of epochs, with the
minority class up-sampled (with replacement, seeded) to match the majority
before the first epoch.  Everything is seeded and bit-reproducible.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .embedding import RelevanceEmbedding
from .errors import DivergenceError, ModelFormatError, TrainingError

INPUT_DIM = 1536
_PROB_FLOOR = 1e-12

_MAGIC = b"RMLP"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIq")  # magic, version, in_dim, hidden, seed


@dataclass
class MlpModel:
    w1: np.ndarray  # (in_dim, h)
    b1: np.ndarray  # (h,)
    w2: np.ndarray  # (h, 1)
    b2: np.ndarray  # (1,)
    seed: int

    @property
    def in_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_width(self) -> int:
        return self.w1.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters.

    epochs and learning_rate default to the values the classifier is meant
    to be trained with; width, batch size, and optimizer are free choices.
    Plain SGD is available but does not move the loss within 6 epochs on
    L2-normalized embedding inputs, so adaptive moments is the default.
    """

    epochs: int = 6
    learning_rate: float = 1e-3
    batch_size: int = 64
    seed: int = 0
    hidden_width: int = 128
    optimizer: str = "adam"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size <= 0 or self.hidden_width <= 0:
            raise ValueError("batch_size and hidden_width must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")


@dataclass
class TrainResult:
    model: MlpModel
    epoch_losses: list[float] = field(default_factory=list)


def _init_model(in_dim: int, hidden: int, seed: int, rng: np.random.Generator) -> MlpModel:
    # symmetric uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per layer
    bound1 = 1.0 / np.sqrt(in_dim)
    bound2 = 1.0 / np.sqrt(hidden)
    return MlpModel(
        w1=rng.uniform(-bound1, bound1, size=(in_dim, hidden)),
        b1=rng.uniform(-bound1, bound1, size=hidden),
        w2=rng.uniform(-bound2, bound2, size=(hidden, 1)),
        b2=rng.uniform(-bound2, bound2, size=1),
        seed=seed,
    )


def _forward(model: MlpModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # overflow in exp saturates the sigmoid to 0/1, which is the intended limit
    with np.errstate(over="ignore", invalid="ignore"):
        pre = x @ model.w1 + model.b1
        hidden = np.maximum(pre, 0.0)
        logits = hidden @ model.w2 + model.b2
        probs = 1.0 / (1.0 + np.exp(-logits[:, 0]))
    return probs, hidden


def _bce(probs: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(probs, _PROB_FLOOR, 1.0 - _PROB_FLOOR)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def loss_and_gradients(
    model: MlpModel, x: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean BCE loss and its analytic gradients for a batch."""
    probs, hidden = _forward(model, x)
    loss = _bce(probs, y)
    dlogits = ((probs - y) / len(y))[:, None]
    grads = {
        "w2": hidden.T @ dlogits,
        "b2": dlogits.sum(axis=0),
    }
    dhidden = dlogits @ model.w2.T
    dhidden[hidden <= 0.0] = 0.0
    grads["w1"] = x.T @ dhidden
    grads["b1"] = dhidden.sum(axis=0)
    return loss, grads


def upsample_balance(
    x: np.ndarray, y: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Resample the minority class with replacement until label counts match.

    No example is ever discarded; balanced input comes back unchanged.
    """
    pos = np.flatnonzero(y == 1.0)
    neg = np.flatnonzero(y == 0.0)
    if len(pos) == len(neg):
        return x, y
    minority, majority = (pos, neg) if len(pos) < len(neg) else (neg, pos)
    extra = rng.choice(minority, size=len(majority) - len(minority), replace=True)
    keep = np.concatenate([np.arange(len(y)), extra])
    return x[keep], y[keep]


def _to_arrays(examples: Sequence[RelevanceEmbedding]) -> tuple[np.ndarray, np.ndarray]:
    if any(e.label is None for e in examples):
        raise TrainingError("all training embeddings must carry a label")
    x = np.stack([np.asarray(e.vector, dtype=np.float64) for e in examples])
    y = np.array([1.0 if e.label else 0.0 for e in examples])
    return x, y


def train(
    examples: Sequence[RelevanceEmbedding],
    config: TrainConfig,
    initial_model: MlpModel | None = None,
) -> TrainResult:
    """Train on labeled relevance embeddings; returns the model and the
    per-epoch mean loss trace.

    Fresh training (no initial model) requires both labels present and at
    least one epoch.  Raises DivergenceError if a loss goes non-finite.
    """
    x, y = _to_arrays(examples)
    return train_arrays(x, y, config, initial_model=initial_model)


def train_arrays(
    x: np.ndarray,
    y: np.ndarray,
    config: TrainConfig,
    initial_model: MlpModel | None = None,
) -> TrainResult:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or len(x) != len(y):
        raise ValueError("x must be (n, dim) with one label per row")
    n_pos = int(np.sum(y == 1.0))
    if n_pos == 0 or n_pos == len(y):
        raise TrainingError("training data must contain both labels")
    if initial_model is None and config.epochs < 1:
        raise TrainingError("fresh training requires at least one epoch")

    rng = np.random.default_rng(config.seed)
    x, y = upsample_balance(x, y, rng)
    if initial_model is not None:
        model = MlpModel(
            w1=initial_model.w1.copy(),
            b1=initial_model.b1.copy(),
            w2=initial_model.w2.copy(),
            b2=initial_model.b2.copy(),
            seed=initial_model.seed,
        )
    else:
        model = _init_model(x.shape[1], config.hidden_width, config.seed, rng)
    if model.in_dim != x.shape[1]:
        raise ValueError(f"model expects {model.in_dim}-dim input, data is {x.shape[1]}-dim")

    params = {"w1": model.w1, "b1": model.b1, "w2": model.w2, "b2": model.b2}
    step = _AdamStep(params) if config.optimizer == "adam" else _SgdStep()

    losses: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(y))
        batch_losses = []
        # non-finite arithmetic is caught below as a divergence error
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, len(order), config.batch_size):
                batch = order[start : start + config.batch_size]
                loss, grads = loss_and_gradients(model, x[batch], y[batch])
                batch_losses.append((loss, len(batch)))
                step.apply(params, grads, config.learning_rate)
        total = sum(n for _, n in batch_losses)
        epoch_loss = sum(l * n for l, n in batch_losses) / total
        if not np.isfinite(epoch_loss):
            raise DivergenceError(epoch + 1, epoch_loss)
        losses.append(epoch_loss)
    return TrainResult(model=model, epoch_losses=losses)


class _SgdStep:
    def apply(self, params, grads, lr):
        for name, grad in grads.items():
            params[name] -= lr * grad


class _AdamStep:
    """Adaptive moment estimation with the usual constants (0.9, 0.999, 1e-8)."""

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def apply(self, params, grads, lr):
        self.t += 1
        for name, grad in grads.items():
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * grad
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * grad**2
            m_hat = self.m[name] / (1 - self.beta1**self.t)
            v_hat = self.v[name] / (1 - self.beta2**self.t)
            params[name] -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


def predict(model: MlpModel, v: np.ndarray) -> float:
    """Probability that one relevance embedding comes from a referring thread."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (model.in_dim,):
        raise ValueError(f"expected vector of shape ({model.in_dim},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("input vector contains non-finite entries")
    probs, _ = _forward(model, v[None, :])
    return float(np.clip(probs[0], _PROB_FLOOR, 1.0 - _PROB_FLOOR))


def predict_batch(model: MlpModel, vectors: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=np.float64)
    probs, _ = _forward(model, vectors)
    return np.clip(probs, _PROB_FLOOR, 1.0 - _PROB_FLOOR)


def thread_semantic_score(model: MlpModel, embs: Sequence[RelevanceEmbedding]) -> float:
    """Mean predicted probability over a thread's relevance embeddings."""
    if not embs:
        raise ValueError("thread_semantic_score requires at least one embedding")
    vectors = np.stack([np.asarray(e.vector, dtype=np.float64) for e in embs])
    return float(np.mean(predict_batch(model, vectors)))


def save_model(model: MlpModel, path: str | Path) -> None:
    """Versioned binary format: header then little-endian float64 W1,b1,W2,b2."""
    header = _HEADER.pack(_MAGIC, _VERSION, model.in_dim, model.hidden_width, model.seed)
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in (model.w1, model.b1, model.w2, model.b2):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path: str | Path) -> MlpModel:
    """Inverse of save_model; bit-exact round-trip.  Rejects corrupt files."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise ModelFormatError("model file is truncated (no header)")
    magic, version, in_dim, hidden, seed = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    sizes = [in_dim * hidden, hidden, hidden, 1]
    expected = _HEADER.size + 8 * sum(sizes)
    if len(blob) != expected:
        raise ModelFormatError(f"model file has {len(blob)} bytes, expected {expected}")
    offset = _HEADER.size
    arrays = []
    for count in sizes:
        arrays.append(np.frombuffer(blob, dtype="<f8", count=count, offset=offset).copy())
        offset += 8 * count
    return MlpModel(
        w1=arrays[0].reshape(in_dim, hidden),
        b1=arrays[1],
        w2=arrays[2].reshape(hidden, 1),
        b2=arrays[3],
        seed=seed,
    )
