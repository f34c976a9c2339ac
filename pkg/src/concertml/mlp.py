"""Feed-forward softmax classifier (default 64/16/16/5) with ReLU hidden
layers, inverted dropout, and mini-batch SGD on categorical cross-entropy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError

Params = tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]


@dataclass(frozen=True)
class TrainConfig:
    hidden_sizes: tuple[int, ...] = (64, 16, 16)
    dropout: tuple[float, ...] | float = 0.0  # per hidden layer
    learning_rate: float = 0.01
    epochs: int = 1000
    batch_size: int = 32
    seed: int = 0
    early_stopping_patience: int | None = None  # needs validation data
    n_classes: int = 5

    def __post_init__(self) -> None:
        if isinstance(self.dropout, (int, float)):
            object.__setattr__(
                self, "dropout", (float(self.dropout),) * len(self.hidden_sizes)
            )
        if len(self.dropout) != len(self.hidden_sizes):
            raise ValueError("need one dropout rate per hidden layer")
        if any(not 0.0 <= p < 1.0 for p in self.dropout):
            raise ValueError("dropout rates must lie in [0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class EpochStats:
    loss: float
    train_accuracy: float
    val_accuracy: float | None


@dataclass(frozen=True)
class MlpModel:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    config: TrainConfig
    history: tuple[EpochStats, ...]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)


def init_params(d: int, hidden_sizes: tuple[int, ...], n_classes: int,
                rng: np.random.Generator) -> Params:
    """Scaled-uniform fan-in initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    sizes = (d,) + tuple(hidden_sizes) + (n_classes,)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return tuple(weights), tuple(biases)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def forward_pass(
    weights: tuple[np.ndarray, ...],
    biases: tuple[np.ndarray, ...],
    X: np.ndarray,
    dropout: tuple[float, ...] = (),
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Affine -> ReLU (-> inverted dropout when training) per hidden layer,
    affine -> softmax at the output. Inference applies no dropout and no
    rescaling. Returns (probabilities, activations, dropout masks).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != weights[0].shape[0]:
        raise ValueError(
            f"input has {X.shape[1]} columns, model expects {weights[0].shape[0]}"
        )
    activations = [X]
    masks: list[np.ndarray] = []
    a = X
    n_hidden = len(weights) - 1
    for layer in range(n_hidden):
        z = a @ weights[layer] + biases[layer]
        a = np.maximum(z, 0.0)
        rate = dropout[layer] if layer < len(dropout) else 0.0
        if training and rate > 0.0:
            if rng is None:
                raise ValueError("training-mode dropout needs an rng")
            mask = (rng.random(a.shape) >= rate) / (1.0 - rate)
            a = a * mask
            masks.append(mask)
        else:
            masks.append(np.ones_like(a))
        activations.append(a)
    probs = _softmax(a @ weights[-1] + biases[-1])
    activations.append(probs)
    return probs, activations, masks


def loss_and_gradients(
    weights: tuple[np.ndarray, ...],
    biases: tuple[np.ndarray, ...],
    X: np.ndarray,
    y: np.ndarray,
    dropout: tuple[float, ...] = (),
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Cross-entropy and its gradients for every weight matrix and bias."""
    y = np.asarray(y, dtype=int)
    probs, activations, masks = forward_pass(
        weights, biases, X, dropout, training, rng
    )
    m = len(y)
    eps = 1e-15
    loss = float(-np.mean(np.log(probs[np.arange(m), y] + eps)))

    grad_w = [np.empty(0)] * len(weights)
    grad_b = [np.empty(0)] * len(biases)
    onehot = np.zeros_like(probs)
    onehot[np.arange(m), y] = 1.0
    delta = (probs - onehot) / m  # d loss / d output logits
    for layer in range(len(weights) - 1, -1, -1):
        grad_w[layer] = activations[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = delta @ weights[layer].T
            delta = delta * masks[layer - 1]  # dropout rescale path
            delta = delta * (activations[layer] > 0)  # ReLU derivative
    return loss, grad_w, grad_b


def mlp_forward(model: MlpModel, X: np.ndarray, training: bool = False,
                seed: int | None = None) -> np.ndarray:
    """Class probabilities for X; training=True re-applies dropout (seeded)."""
    rng = np.random.default_rng(seed) if training else None
    probs, _, _ = forward_pass(
        model.weights, model.biases, X,
        dropout=tuple(model.config.dropout), training=training, rng=rng,
    )
    return probs


def _accuracy(weights, biases, X, y) -> float:
    probs, _, _ = forward_pass(weights, biases, X)
    return float(np.mean(np.argmax(probs, axis=1) == y))


def mlp_train(
    X: np.ndarray,
    y: np.ndarray,
    config: TrainConfig = TrainConfig(),
    X_val: np.ndarray | None = None,
    y_val: np.ndarray | None = None,
) -> MlpModel:
    """Seeded mini-batch SGD; records per-epoch loss and train/val accuracy.

    With ``early_stopping_patience`` set and validation data supplied,
    training stops once validation accuracy has not improved for that many
    epochs and the best-scoring parameters are restored.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    if np.any((y < 0) | (y >= config.n_classes)):
        raise ValueError(f"labels must lie in 0..{config.n_classes - 1}")
    if X.shape[0] != len(y):
        raise ValueError("X row count does not match label length")

    rng = np.random.default_rng(config.seed)
    weights, biases = init_params(X.shape[1], config.hidden_sizes,
                                  config.n_classes, rng)
    weights, biases = list(weights), list(biases)
    dropout = tuple(config.dropout)
    lr = config.learning_rate

    history: list[EpochStats] = []
    best_val = -1.0
    best_snapshot: Params | None = None
    stale = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(y))
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(y), config.batch_size):
            batch = order[start:start + config.batch_size]
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grad_w, grad_b = loss_and_gradients(
                    tuple(weights), tuple(biases), X[batch], y[batch],
                    dropout=dropout, training=True, rng=rng,
                )
            if not np.isfinite(loss):
                raise ConvergenceError(
                    f"training loss became non-finite (learning rate {lr})"
                )
            for layer in range(len(weights)):
                weights[layer] = weights[layer] - lr * grad_w[layer]
                biases[layer] = biases[layer] - lr * grad_b[layer]
            if not all(np.all(np.isfinite(w)) for w in weights):
                raise ConvergenceError(
                    f"weights became non-finite (learning rate {lr})"
                )
            epoch_loss += loss
            n_batches += 1

        with np.errstate(over="ignore", invalid="ignore"):
            train_acc = _accuracy(weights, biases, X, y)
            val_acc = None
            if X_val is not None and y_val is not None:
                val_acc = _accuracy(weights, biases, X_val,
                                    np.asarray(y_val, dtype=int))
        history.append(EpochStats(epoch_loss / n_batches, train_acc, val_acc))

        if config.early_stopping_patience is not None and val_acc is not None:
            if val_acc > best_val:
                best_val = val_acc
                best_snapshot = (
                    tuple(w.copy() for w in weights),
                    tuple(b.copy() for b in biases),
                )
                stale = 0
            else:
                stale += 1
                if stale >= config.early_stopping_patience:
                    break

    if best_snapshot is not None:
        weights, biases = list(best_snapshot[0]), list(best_snapshot[1])
    return MlpModel(
        weights=tuple(weights),
        biases=tuple(biases),
        config=config,
        history=tuple(history),
    )


def history_to_csv(model: MlpModel) -> str:
    """Per-epoch loss/accuracy curves as CSV text."""
    lines = ["epoch,loss,train_accuracy,val_accuracy"]
    for i, st in enumerate(model.history):
        val = "" if st.val_accuracy is None else repr(st.val_accuracy)
        lines.append(f"{i},{st.loss!r},{st.train_accuracy!r},{val}")
    return "\n".join(lines) + "\n"
