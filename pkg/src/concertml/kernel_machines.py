"""RBF kernel, epsilon-insensitive support vector regression, and one-vs-rest
support vector classification.

Both machines reduce to one box-constrained dual with a single equality
constraint,

    minimize    0.5 * a'Qa + p'a
    subject to  sum_i s_i a_i = 0,   0 <= a_i <= C,

with Q[i,j] = s_i s_j K[i,j]: for classification s is the +-1 label vector and
p = -1; for regression the variables are stacked as [alpha; alpha'] with
s = [+1...; -1...] and p = [eps - y; eps + y]. One SMO loop (maximal-violating
pair selection, analytic two-variable updates) serves both.

Note on conventions: the regularization box C multiplies the slack penalty in
the usual way (large C fits harder). Cited configurations that state the
penalty as (1/C) map onto this form with the same C values, consistent with
"small C = simpler model".
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError

FULL_GRAM_MAX_ROWS = 2000  # above this, kernel rows are computed on demand


@dataclass(frozen=True)
class RbfKernel:
    gamma: float

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")

    def __call__(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return rbf_matrix(A, B, self.gamma)


def rbf_eval(x: np.ndarray, z: np.ndarray, gamma: float) -> float:
    """exp(-gamma * ||x - z||^2)."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {z.shape}")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    return float(np.exp(-gamma * np.sum((x - z) ** 2)))


def rbf_matrix(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """Pairwise RBF similarities between the rows of A and B."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    sq = (
        np.sum(A ** 2, axis=1)[:, None]
        + np.sum(B ** 2, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


class _KernelRows:
    """Row access to the (possibly index-mirrored) kernel matrix.

    Materializes the full Gram matrix for small problems; otherwise serves
    rows from an LRU cache keyed by base index.
    """

    def __init__(self, X: np.ndarray, gamma: float, mirrored: bool):
        self.X = X
        self.gamma = gamma
        self.m = X.shape[0]
        self.n = 2 * self.m if mirrored else self.m
        self.mirrored = mirrored
        self._full: np.ndarray | None = None
        self._cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self._cache_limit = max(64, FULL_GRAM_MAX_ROWS // 2)
        if self.n <= FULL_GRAM_MAX_ROWS:
            self._full = rbf_matrix(X, X, gamma)

    def base_row(self, i: int) -> np.ndarray:
        base = i % self.m
        if self._full is not None:
            return self._full[base]
        row = self._cache.get(base)
        if row is None:
            row = rbf_matrix(self.X[base:base + 1], self.X, self.gamma)[0]
            self._cache[base] = row
            if len(self._cache) > self._cache_limit:
                self._cache.popitem(last=False)
        else:
            self._cache.move_to_end(base)
        return row

    def row(self, i: int) -> np.ndarray:
        base = self.base_row(i)
        if not self.mirrored:
            return base
        return np.concatenate([base, base])

    def diag(self) -> np.ndarray:
        d = np.ones(self.m)  # rbf(x, x) = 1
        return np.concatenate([d, d]) if self.mirrored else d


@dataclass(frozen=True)
class SmoResult:
    a: np.ndarray
    bias: float
    iterations: int
    kkt_violation: float
    dual_objective: float  # maximization-form value
    objective_history: tuple[float, ...]  # empty unless tracking was requested


def smo_solve(
    krow: Callable[[int], np.ndarray],
    kdiag: np.ndarray,
    s: np.ndarray,
    p: np.ndarray,
    C: float,
    tol: float = 1e-3,
    max_iter: int = 10_000,
    track_objective: bool = False,
) -> SmoResult:
    """Pairwise coordinate descent on the shared dual form.

    Each step picks the maximal KKT-violating pair (deterministic in data
    order), solves the two-variable subproblem analytically, and clips to the
    box; the equality constraint is preserved exactly. Raises
    ConvergenceError (carrying the final violation) if the pass budget runs
    out before the violation drops below ``tol``.
    """
    n = len(p)
    eps = 1e-12
    a = np.zeros(n)
    g = p.astype(float).copy()
    history: list[float] = []

    def objective() -> float:
        # f = 0.5 a'Qa + p'a = 0.5 (a'g + p'a) since g = Qa + p
        return 0.5 * float(a @ g + p @ a)

    up_pos = s > 0
    iterations = 0
    m_val = 0.0
    big_val = 0.0
    while True:
        minus_sg = -s * g
        can_grow = a < C - eps
        can_shrink = a > eps
        i_up = np.where(up_pos, can_grow, can_shrink)
        i_low = np.where(up_pos, can_shrink, can_grow)

        if not i_up.any() or not i_low.any():
            m_val = float(minus_sg[i_up].max()) if i_up.any() else np.nan
            big_val = float(minus_sg[i_low].min()) if i_low.any() else np.nan
            violation = 0.0
            break

        up_scores = np.where(i_up, minus_sg, -np.inf)
        low_scores = np.where(i_low, minus_sg, np.inf)
        i = int(np.argmax(up_scores))
        j = int(np.argmin(low_scores))
        m_val, big_val = float(minus_sg[i]), float(minus_sg[j])
        violation = m_val - big_val
        if violation <= tol:
            break
        if iterations >= max_iter:
            raise ConvergenceError(
                f"SMO did not converge within {max_iter} passes "
                f"(KKT violation {violation:.3e} > tol {tol:.1e})",
                violation=violation,
            )
        if track_objective:
            history.append(objective())

        row_i = krow(i)
        row_j = krow(j)
        si, sj = float(s[i]), float(s[j])
        eta = kdiag[i] + kdiag[j] - 2.0 * si * sj * row_i[j]
        eta = max(eta, 1e-12)
        t = violation / eta
        t = min(t, (C - a[i]) if si > 0 else a[i])
        t = min(t, a[j] if sj > 0 else (C - a[j]))
        if t <= 0:
            break  # box-blocked direction: numerically optimal

        a[i] += si * t
        a[j] -= sj * t
        # Q[:, i] = s * (s_i * K[:, i]); same pattern for j
        g += (si * t) * (s * (si * row_i)) + (-sj * t) * (s * (sj * row_j))
        iterations += 1

    if track_objective:
        history.append(objective())

    interior = (a > eps) & (a < C - eps)
    minus_sg = -s * g
    if interior.any():
        bias = float(minus_sg[interior].mean())
    else:
        finite = [v for v in (m_val, big_val) if np.isfinite(v)]
        bias = float(np.mean(finite)) if finite else 0.0

    return SmoResult(
        a=a,
        bias=bias,
        iterations=iterations,
        kkt_violation=max(violation, 0.0),
        dual_objective=-objective(),
        objective_history=tuple(history),
    )


@dataclass(frozen=True)
class SvrModel:
    support_vectors: np.ndarray  # rows with nonzero dual coefficient
    dual_coef: np.ndarray  # beta_i = alpha_i - alpha'_i, in [-C, C]
    bias: float
    C: float
    gamma: float
    epsilon: float
    dual_objective: float
    iterations: int
    kkt_violation: float
    slack_summary: dict[str, float]

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        K = rbf_matrix(X, self.support_vectors, self.gamma)
        return K @ self.dual_coef + self.bias


def svr_fit(
    X: np.ndarray,
    y: np.ndarray,
    C: float = 0.5,
    gamma: float = 0.01,
    epsilon: float = 2.0,
    tol: float = 1e-3,
    max_iter: int = 10_000,
) -> SvrModel:
    """Fit the epsilon-insensitive tube by SMO on the stacked dual."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    m = X.shape[0]
    if m < 2:
        raise ValueError("SVR needs at least 2 rows")
    if C <= 0 or gamma <= 0 or epsilon < 0:
        raise ValueError("require C > 0, gamma > 0, epsilon >= 0")

    rows = _KernelRows(X, gamma, mirrored=True)
    s = np.concatenate([np.ones(m), -np.ones(m)])
    p = np.concatenate([epsilon - y, epsilon + y])
    result = smo_solve(rows.row, rows.diag(), s, p, C, tol=tol, max_iter=max_iter)

    beta = result.a[:m] - result.a[m:]
    support = np.abs(beta) > 1e-12
    preds = (
        rbf_matrix(X, X[support], gamma) @ beta[support] + result.bias
        if support.any()
        else np.full(m, result.bias)
    )
    above = np.maximum(0.0, y - preds - epsilon)
    below = np.maximum(0.0, preds - y - epsilon)
    return SvrModel(
        support_vectors=X[support].copy(),
        dual_coef=beta[support].copy(),
        bias=result.bias,
        C=C,
        gamma=gamma,
        epsilon=epsilon,
        dual_objective=result.dual_objective,
        iterations=result.iterations,
        kkt_violation=result.kkt_violation,
        slack_summary={
            "sum_xi": float(above.sum()),
            "sum_xi_prime": float(below.sum()),
            "n_outside_tube": int(np.sum((above > 0) | (below > 0))),
        },
    )


@dataclass(frozen=True)
class BinarySvm:
    support_vectors: np.ndarray
    signed_coef: np.ndarray  # alpha_i * y_i for support rows
    bias: float
    dual_objective: float
    iterations: int
    kkt_violation: float
    alpha_y_residual: float  # sum(alpha_i y_i), ~0 by the equality constraint

    def decision_with(self, X: np.ndarray, gamma: float) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        return rbf_matrix(X, self.support_vectors, gamma) @ self.signed_coef + self.bias


@dataclass(frozen=True)
class SvcModel:
    machines: dict[int, BinarySvm]  # class index -> one-vs-rest machine
    C: float
    gamma: float
    n_classes: int

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full((X.shape[0], self.n_classes), -np.inf)
        for k, machine in self.machines.items():
            out[:, k] = machine.decision_with(X, self.gamma)
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)


def svc_fit(
    X: np.ndarray,
    y: np.ndarray,
    C: float = 10.0,
    gamma: float = 0.01,
    n_classes: int = 5,
    tol: float = 1e-3,
    max_iter: int = 10_000,
) -> SvcModel:
    """One-vs-rest SMO fits, one binary machine per class present in y.

    Prediction is the argmax of the decision values; ties resolve to the
    lowest class index.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    if C <= 0 or gamma <= 0:
        raise ValueError("require C > 0 and gamma > 0")
    present = np.unique(y)
    if present.size < 2:
        raise ValueError("SVC needs at least 2 classes present")
    if np.any((present < 0) | (present >= n_classes)):
        raise ValueError(f"labels must lie in 0..{n_classes - 1}")

    rows = _KernelRows(X, gamma, mirrored=False)
    diag = rows.diag()
    machines: dict[int, BinarySvm] = {}
    for k in present:
        t = np.where(y == k, 1.0, -1.0)
        # Q = tt' * K via s = t; p = -1
        result = smo_solve(
            lambda i: rows.row(i), diag, t, -np.ones(len(y)), C,
            tol=tol, max_iter=max_iter,
        )
        support = result.a > 1e-12
        machines[int(k)] = BinarySvm(
            support_vectors=X[support].copy(),
            signed_coef=(result.a * t)[support].copy(),
            bias=result.bias,
            dual_objective=result.dual_objective,
            iterations=result.iterations,
            kkt_violation=result.kkt_violation,
            alpha_y_residual=float(np.sum(result.a * t)),
        )
    return SvcModel(machines=machines, C=C, gamma=gamma, n_classes=n_classes)


def svc_predict(model: SvcModel, X: np.ndarray) -> np.ndarray:
    return model.predict(X)
