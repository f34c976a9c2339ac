"""CART decision trees and a bagged random forest for the 5-class task.

Splits are greedy gini-gain maximizers over a seeded random feature subset
per node; thresholds sit at midpoints between consecutive distinct sorted
values, rows with x[feature] <= threshold go left. Ties in gain resolve to
the lowest feature index, then the lowest threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def gini(labels: np.ndarray, n_classes: int = 5) -> float:
    """1 - sum(p_k^2) over class frequencies."""
    labels = np.asarray(labels, dtype=int)
    if labels.size == 0:
        raise ValueError("gini of an empty label set is undefined")
    counts = np.bincount(labels, minlength=n_classes)
    p = counts / labels.size
    return float(1.0 - np.sum(p ** 2))


@dataclass(frozen=True)
class TreeNode:
    """Either a split (feature, threshold, children) or a leaf (class counts)."""

    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    counts: tuple[int, ...] | None = None

    @property
    def is_leaf(self) -> bool:
        return self.counts is not None


def _best_split(
    X: np.ndarray, y: np.ndarray, features: np.ndarray,
    min_samples_leaf: int, n_classes: int,
) -> tuple[float, int, float] | None:
    """Best (gain, feature, threshold) over candidate features, or None.

    Vectorized per feature: prefix class counts over the sorted column give
    left/right gini at every split position in one pass.
    """
    n = len(y)
    parent_counts = np.bincount(y, minlength=n_classes).astype(float)
    parent_gini = 1.0 - np.sum((parent_counts / n) ** 2)

    best: tuple[float, int, float] | None = None
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0

    for f in features:
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        prefix = np.cumsum(onehot[order], axis=0)  # (n, n_classes)

        pos = np.arange(1, n)  # left side takes sv[:pos]
        valid = (
            (sv[1:] > sv[:-1])
            & (pos >= min_samples_leaf)
            & (n - pos >= min_samples_leaf)
        )
        if not valid.any():
            continue
        idx = pos[valid]
        left_counts = prefix[idx - 1]
        right_counts = parent_counts - left_counts
        nl = idx.astype(float)
        nr = n - nl
        gini_left = 1.0 - np.sum((left_counts / nl[:, None]) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right_counts / nr[:, None]) ** 2, axis=1)
        gains = parent_gini - (nl / n) * gini_left - (nr / n) * gini_right

        k = int(np.argmax(gains))  # first max -> lowest threshold
        gain = float(gains[k])
        if gain > 1e-12 and (best is None or gain > best[0]):
            threshold = float((sv[idx[k] - 1] + sv[idx[k]]) / 2.0)
            best = (gain, int(f), threshold)
    return best


def _grow(
    X: np.ndarray, y: np.ndarray, depth: int,
    max_depth: int | None, min_samples_leaf: int, subset_size: int,
    rng: np.random.Generator, n_classes: int,
) -> TreeNode:
    counts = np.bincount(y, minlength=n_classes)

    def leaf() -> TreeNode:
        return TreeNode(counts=tuple(int(c) for c in counts))

    if (
        (max_depth is not None and depth >= max_depth)
        or len(y) < 2 * min_samples_leaf
        or np.count_nonzero(counts) <= 1
    ):
        return leaf()

    d = X.shape[1]
    if subset_size >= d:
        features = np.arange(d)
    else:
        features = np.sort(rng.choice(d, size=subset_size, replace=False))
    best = _best_split(X, y, features, min_samples_leaf, n_classes)
    if best is None:
        return leaf()

    _, feature, threshold = best
    go_left = X[:, feature] <= threshold
    return TreeNode(
        feature=feature,
        threshold=threshold,
        left=_grow(X[go_left], y[go_left], depth + 1, max_depth,
                   min_samples_leaf, subset_size, rng, n_classes),
        right=_grow(X[~go_left], y[~go_left], depth + 1, max_depth,
                    min_samples_leaf, subset_size, rng, n_classes),
    )


def tree_fit(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    feature_subset_size: int | None = None,
    seed: int = 0,
    n_classes: int = 5,
) -> TreeNode:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    if len(y) < min_samples_leaf:
        raise ValueError("need at least min_samples_leaf rows")
    subset = feature_subset_size if feature_subset_size is not None else X.shape[1]
    rng = np.random.default_rng(seed)
    return _grow(X, y, 0, max_depth, min_samples_leaf, subset, rng, n_classes)


def _route_counts(node: TreeNode, X: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
    """Batched traversal: write each routed row's leaf counts into ``out``."""
    if node.is_leaf:
        out[idx] = node.counts
        return
    go_left = X[idx, node.feature] <= node.threshold
    _route_counts(node.left, X, idx[go_left], out)
    _route_counts(node.right, X, idx[~go_left], out)


def tree_leaf_counts(node: TreeNode, X: np.ndarray, n_classes: int = 5) -> np.ndarray:
    """Per-row class counts of the leaf each row lands in, shape (M, n_classes)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.zeros((X.shape[0], n_classes))
    _route_counts(node, X, np.arange(X.shape[0]), out)
    return out


def tree_predict(node: TreeNode, X: np.ndarray, n_classes: int = 5) -> np.ndarray:
    return np.argmax(tree_leaf_counts(node, X, n_classes), axis=1)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 105
    max_depth: int | None = 47
    min_samples_leaf: int = 10
    feature_subset_size: int | None = None  # None -> ceil(sqrt(d))
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


@dataclass(frozen=True)
class RandomForest:
    trees: tuple[TreeNode, ...]
    params: ForestParams
    n_classes: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        return forest_predict(self, X)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return forest_predict_proba(self, X)


def forest_fit(X: np.ndarray, y: np.ndarray, params: ForestParams = ForestParams(),
               n_classes: int = 5) -> RandomForest:
    """Fit n_trees CART trees on seeded bootstrap samples (M draws each)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    m, d = X.shape
    if m < 1:
        raise ValueError("cannot fit a forest on an empty dataset")
    subset = params.feature_subset_size
    if subset is None:
        subset = max(1, math.ceil(math.sqrt(d)))

    seeds = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    trees = []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        if params.bootstrap:
            idx = rng.integers(0, m, size=m)
            Xb, yb = X[idx], y[idx]
        else:
            Xb, yb = X, y
        trees.append(
            _grow(Xb, yb, 0, params.max_depth, params.min_samples_leaf,
                  subset, rng, n_classes)
        )
    return RandomForest(trees=tuple(trees), params=params, n_classes=n_classes)


def forest_predict(model: RandomForest, X: np.ndarray) -> np.ndarray:
    """Majority vote over trees; ties resolve to the lowest class index."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    votes = np.zeros((X.shape[0], model.n_classes), dtype=int)
    rows = np.arange(X.shape[0])
    for tree in model.trees:
        counts = tree_leaf_counts(tree, X, model.n_classes)
        votes[rows, np.argmax(counts, axis=1)] += 1
    return np.argmax(votes, axis=1)


def forest_predict_proba(model: RandomForest, X: np.ndarray) -> np.ndarray:
    """Mean of per-tree leaf class frequencies; rows sum to 1."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    probs = np.zeros((X.shape[0], model.n_classes))
    for tree in model.trees:
        counts = tree_leaf_counts(tree, X, model.n_classes)
        probs += counts / counts.sum(axis=1, keepdims=True)
    return probs / len(model.trees)
