"""Linear models: SGD regression under the root-mean-squared-percentage-error
objective, polynomial feature expansion, and 5-class logistic regression.

The regression loss optimized by SGD is the mean squared percentage error
mean(((y - f(x)) / y)^2); dropping the outer square root keeps the argmin and
smooth gradients. Reported scores apply the root.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .data_model import CONTINUOUS, DUMMY, FeatureMatrix, as_matrix
from .errors import ConvergenceError
from .preprocess import PcaState, fit_pca


def rmspe(y: np.ndarray, y_hat: np.ndarray) -> float:
    """sqrt(mean(((y_i - y_hat_i) / y_i)^2)); every y_i must be nonzero."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ValueError("y and y_hat must have the same shape")
    if y.size == 0:
        raise ValueError("rmspe of empty vectors is undefined")
    if np.any(y == 0):
        raise ValueError("rmspe divides by the target; zero targets are not allowed")
    ratio = (y - y_hat) / y
    return float(np.sqrt(np.mean(ratio ** 2)))


def _term_name(names: tuple[str, ...], term: tuple[int, ...]) -> str:
    parts = []
    for j in sorted(set(term)):
        power = term.count(j)
        parts.append(names[j] if power == 1 else f"{names[j]}^{power}")
    return "*".join(parts)


def poly_expand(X: FeatureMatrix | np.ndarray, degree: int) -> FeatureMatrix:
    """All monomials of total degree <= degree.

    Degree 0 is a single constant column (intercept-only design); degree 1 is
    the identity. For degree >= 2, binary dummy columns are excluded from
    self-powers (x^2 = x) and appear only in cross terms of degree <= 2;
    higher-order terms use the non-dummy columns.
    """
    X = as_matrix(X)
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if degree > 3:
        raise ValueError("degree > 3 rejected: expansion size blows up combinatorially")
    m = X.n_rows
    if degree == 0:
        return FeatureMatrix(np.ones((m, 1)), ("1",), (CONTINUOUS,))
    if degree == 1:
        return X

    values, names, kinds = X.values, X.column_names, X.column_kinds
    cols = [np.ones(m)] + [values[:, j] for j in range(len(names))]
    out_names = ["1"] + list(names)
    out_kinds = [CONTINUOUS] + list(kinds)

    for i, j in combinations_with_replacement(range(len(names)), 2):
        if i == j and kinds[i] == DUMMY:
            continue
        cols.append(values[:, i] * values[:, j])
        out_names.append(_term_name(names, (i, j)))
        out_kinds.append(CONTINUOUS)

    if degree == 3:
        non_dummy = [j for j in range(len(names)) if kinds[j] != DUMMY]
        for term in combinations_with_replacement(non_dummy, 3):
            col = values[:, term[0]] * values[:, term[1]] * values[:, term[2]]
            cols.append(col)
            out_names.append(_term_name(names, term))
            out_kinds.append(CONTINUOUS)

    return FeatureMatrix(np.column_stack(cols), tuple(out_names), tuple(out_kinds))


def squared_percentage_loss(
    w: np.ndarray, w0: float, X: np.ndarray, y: np.ndarray,
    alpha: float = 0.0, penalty: str | None = None,
) -> float:
    """mean(((y - Xw - w0)/y)^2) plus the optional weight penalty."""
    ratio = (y - (X @ w + w0)) / y
    loss = float(np.mean(ratio ** 2))
    if penalty == "l2":
        loss += alpha * float(np.sum(w ** 2))
    elif penalty == "l1":
        loss += alpha * float(np.sum(np.abs(w)))
    return loss


def squared_percentage_grad(
    w: np.ndarray, w0: float, X: np.ndarray, y: np.ndarray,
    alpha: float = 0.0, penalty: str | None = None,
) -> tuple[np.ndarray, float]:
    """Analytic gradient of the smooth part of squared_percentage_loss.

    The L1 penalty is non-smooth and handled by proximal steps in the
    optimizer, so only the L2 term contributes here.
    """
    ratio = (y - (X @ w + w0)) / y
    factor = -2.0 * ratio / y / len(y)
    grad_w = X.T @ factor
    grad_w0 = float(np.sum(factor))
    if penalty == "l2":
        grad_w = grad_w + 2.0 * alpha * w
    return grad_w, grad_w0


@dataclass(frozen=True)
class SgdConfig:
    penalty: str = "l2"  # l1 | l2
    alpha: float = 0.1
    degree: int = 1
    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if self.penalty not in ("l1", "l2"):
            raise ValueError(f"penalty must be l1 or l2, got {self.penalty!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass(frozen=True)
class SgdRegressor:
    weights: np.ndarray
    intercept: float
    config: SgdConfig
    feature_names: tuple[str, ...]  # after polynomial expansion
    train_rmspe: float

    def predict(self, X: FeatureMatrix | np.ndarray) -> np.ndarray:
        Z = poly_expand(as_matrix(X), self.config.degree)
        if Z.column_names != self.feature_names:
            raise ValueError("feature columns do not match the fitted design")
        return Z.values @ self.weights + self.intercept


def sgd_fit(X: FeatureMatrix | np.ndarray, y: np.ndarray, config: SgdConfig = SgdConfig()) -> SgdRegressor:
    """Mini-batch SGD on the squared-percentage surrogate with an
    inverse-scaling step size eta_t = eta0 / (1 + eta0 * alpha * t).

    The intercept is never penalized; L1 uses proximal soft-threshold steps.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("targets must be strictly positive (the loss divides by y)")
    Z = poly_expand(as_matrix(X), config.degree)
    if not np.all(np.isfinite(Z.values)):
        raise ValueError("design matrix must be finite")
    n, d = Z.values.shape
    if n != len(y):
        raise ValueError("X row count does not match target length")

    rng = np.random.default_rng(config.seed)
    w = np.zeros(d)
    w0 = 0.0
    eta0, alpha = config.learning_rate, config.alpha
    for epoch in range(config.epochs):
        eta = eta0 / (1.0 + eta0 * alpha * epoch)
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            Zb, yb = Z.values[batch], y[batch]
            gw, gw0 = squared_percentage_grad(
                w, w0, Zb, yb, alpha=alpha,
                penalty="l2" if config.penalty == "l2" else None,
            )
            w = w - eta * gw
            w0 = w0 - eta * gw0
            if config.penalty == "l1" and alpha > 0:
                w = np.sign(w) * np.maximum(np.abs(w) - eta * alpha, 0.0)
        with np.errstate(over="ignore", invalid="ignore"):
            epoch_loss = squared_percentage_loss(w, w0, Z.values, y)
        if not np.isfinite(epoch_loss):
            raise ConvergenceError(
                f"SGD loss became non-finite (learning rate {eta0})"
            )

    train_pred = Z.values @ w + w0
    return SgdRegressor(
        weights=w,
        intercept=w0,
        config=config,
        feature_names=Z.column_names,
        train_rmspe=rmspe(y, train_pred),
    )


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray  # (n_classes, d)
    biases: np.ndarray  # (n_classes,)
    C: float
    penalty: str
    mode: str  # multinomial | ovr
    classes: tuple[int, ...]
    pca: PcaState | None = None

    def _design(self, X: FeatureMatrix | np.ndarray) -> np.ndarray:
        values = X.values if isinstance(X, FeatureMatrix) else np.atleast_2d(np.asarray(X, dtype=float))
        if self.pca is not None:
            values = (values - self.pca.means) @ self.pca.components.T
        return values

    def predict_proba(self, X: FeatureMatrix | np.ndarray) -> np.ndarray:
        V = self._design(X)
        scores = V @ self.weights.T + self.biases
        if self.mode == "multinomial":
            return _softmax(scores)
        sig = _sigmoid(scores)
        return sig / sig.sum(axis=1, keepdims=True)

    def predict(self, X: FeatureMatrix | np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def logistic_fit(
    X: FeatureMatrix | np.ndarray,
    y: np.ndarray,
    C: float = 0.1,
    penalty: str = "l1",
    mode: str = "multinomial",
    seed: int = 0,
    learning_rate: float = 0.5,
    epochs: int = 500,
    pca_components: int = 0,
    n_classes: int = 5,
) -> LogisticModel:
    """Full-batch gradient descent on cross-entropy plus a (1/C) penalty.

    OvR fits one sigmoid machine per class and normalizes the scores to a
    distribution at predict time; multinomial fits the softmax jointly. The
    objective is sum cross-entropy + (1/C) * penalty, optimized per-sample as
    mean cross-entropy + 1/(C*M) * penalty, so C values carry the usual
    inverse-regularization meaning independent of dataset size. Both
    penalties apply as proximal steps after each data-gradient step (soft
    threshold for L1, closed-form shrinkage for L2), which keeps the update
    stable at any C and gives small-C L1 models exact zero weights.
    """
    del seed  # full-batch descent from zero init is already deterministic
    y = np.asarray(y, dtype=int)
    if C <= 0:
        raise ValueError("C must be > 0")
    if penalty not in ("l1", "l2"):
        raise ValueError(f"penalty must be l1 or l2, got {penalty!r}")
    if mode not in ("multinomial", "ovr"):
        raise ValueError(f"mode must be multinomial or ovr, got {mode!r}")
    present = np.unique(y)
    if present.size < 2:
        raise ValueError("logistic regression needs at least 2 classes present")
    if np.any((present < 0) | (present >= n_classes)):
        raise ValueError(f"labels must lie in 0..{n_classes - 1}")

    X = as_matrix(X)
    pca_state = None
    V = X.values
    if pca_components:
        pca_state = fit_pca(X, pca_components)
        V = (V - pca_state.means) @ pca_state.components.T
    m, d = V.shape

    inv_c = 1.0 / (C * m)  # per-sample penalty weight
    onehot = np.zeros((m, n_classes))
    onehot[np.arange(m), y] = 1.0

    def prox(W: np.ndarray, eta: float) -> np.ndarray:
        if penalty == "l1":
            return np.sign(W) * np.maximum(np.abs(W) - eta * inv_c, 0.0)
        return W / (1.0 + eta * inv_c)

    W = np.zeros((n_classes, d))
    b = np.zeros(n_classes)
    if mode == "multinomial":
        for _ in range(epochs):
            probs = _softmax(V @ W.T + b)
            delta = (probs - onehot) / m
            W = prox(W - learning_rate * (delta.T @ V), learning_rate)
            b = b - learning_rate * delta.sum(axis=0)
    else:
        for k in range(n_classes):
            t = onehot[:, k]
            wk = np.zeros(d)
            bk = 0.0
            for _ in range(epochs):
                sig = _sigmoid(V @ wk + bk)
                delta = (sig - t) / m
                wk = prox(wk - learning_rate * (V.T @ delta), learning_rate)
                bk = bk - learning_rate * float(delta.sum())
            W[k], b[k] = wk, bk

    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
        raise ConvergenceError(
            f"logistic fit diverged to non-finite parameters (learning rate {learning_rate})"
        )
    return LogisticModel(
        weights=W, biases=b, C=C, penalty=penalty, mode=mode,
        classes=tuple(range(n_classes)), pca=pca_state,
    )


def logistic_predict_proba(model: LogisticModel, X: FeatureMatrix | np.ndarray) -> np.ndarray:
    return model.predict_proba(X)
