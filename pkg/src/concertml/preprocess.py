"""Log transform, min-max scaling, PCA, and class-balancing oversampling.

All transforms are pure: fitted states are frozen dataclasses and outputs are
fresh matrices, so states can be shared across threads after fit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .data_model import CONTINUOUS, FeatureMatrix, SchemaError

# Columns whose raw values are exponentially distributed or outlier-heavy;
# they enter models as ln(x + offset). User-overridable.
DEFAULT_LOG_COLUMNS = (
    "average_price",
    "playcount",
    "Population_Estimate_2017",
    "genres_num",
    "venue_concert_count",
)


@dataclass(frozen=True)
class LogSpec:
    """Which columns get ln(x + offset); offset 0 unless zeros occur."""

    columns: tuple[str, ...] = DEFAULT_LOG_COLUMNS
    offsets: Mapping[str, float] = field(default_factory=dict)

    def offset_for(self, column: str) -> float:
        off = float(self.offsets.get(column, 0.0))
        if off < 0:
            raise ValueError(f"offset for {column} must be >= 0")
        return off


def log_transform(X: FeatureMatrix, spec: LogSpec = LogSpec()) -> FeatureMatrix:
    """Replace targeted columns by ln(x + offset); absent columns are skipped."""
    values = X.values.copy()
    for name in spec.columns:
        if name not in X.column_names:
            continue
        j = X.column_names.index(name)
        off = spec.offset_for(name)
        shifted = values[:, j] + off
        if np.any(shifted <= 0):
            i = int(np.argmax(shifted <= 0))
            raise ValueError(
                f"log_transform: nonpositive argument at row {i}, column {name} "
                f"(value {values[i, j]}, offset {off})"
            )
        values[:, j] = np.log(shifted)
    return X.with_values(values)


def log_target(y: np.ndarray) -> np.ndarray:
    """ln of a strictly positive target vector."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("log target requires strictly positive values")
    return np.log(y)


@dataclass(frozen=True)
class ScalerState:
    """Per-column training min/max for the affine [0, 1] map."""

    column_names: tuple[str, ...]
    mins: np.ndarray
    maxs: np.ndarray


def fit_minmax(X: FeatureMatrix) -> ScalerState:
    if X.n_rows == 0:
        raise ValueError("cannot fit a scaler on an empty matrix")
    return ScalerState(
        column_names=X.column_names,
        mins=X.values.min(axis=0),
        maxs=X.values.max(axis=0),
    )


def _check_scaler_columns(X: FeatureMatrix, state: ScalerState) -> None:
    if X.column_names != state.column_names:
        unknown = [n for n in X.column_names if n not in state.column_names]
        raise SchemaError(
            "matrix columns do not match fitted scaler"
            + (f" (unknown: {', '.join(unknown)})" if unknown else "")
        )


def apply_minmax(X: FeatureMatrix, state: ScalerState) -> FeatureMatrix:
    """x' = (x - min) / (max - min); constant columns map to 0, no clamping."""
    _check_scaler_columns(X, state)
    span = state.maxs - state.mins
    safe = np.where(span == 0, 1.0, span)
    scaled = (X.values - state.mins) / safe
    scaled[:, span == 0] = 0.0
    return X.with_values(scaled)


def invert_minmax(X: FeatureMatrix, state: ScalerState) -> FeatureMatrix:
    """Undo apply_minmax; constant columns recover their fitted min."""
    _check_scaler_columns(X, state)
    span = state.maxs - state.mins
    return X.with_values(X.values * span + state.mins)


@dataclass(frozen=True)
class PcaState:
    components: np.ndarray  # (k, d), orthonormal rows
    means: np.ndarray  # (d,)
    explained_variance: np.ndarray  # (k,), non-increasing
    column_names: tuple[str, ...]


def fit_pca(X: FeatureMatrix, k: int) -> PcaState:
    """Top-k principal axes of the column-centered data, via SVD.

    Sign convention: the first nonzero entry of each component is positive.
    Explained variances use the sample (M-1) denominator.
    """
    m, d = X.values.shape
    if not 1 <= k <= d:
        raise ValueError(f"k must lie in 1..{d}, got {k}")
    if m < 2:
        raise ValueError("PCA needs at least 2 rows")
    means = X.values.mean(axis=0)
    centered = X.values - means
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:k].copy()
    for row in components:
        nz = np.nonzero(np.abs(row) > 1e-12)[0]
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    variances = (singular[:k] ** 2) / (m - 1)
    return PcaState(components, means, variances, X.column_names)


def pca_project(X: FeatureMatrix, state: PcaState) -> FeatureMatrix:
    if X.column_names != state.column_names:
        raise SchemaError("matrix columns do not match fitted PCA state")
    projected = (X.values - state.means) @ state.components.T
    k = state.components.shape[0]
    names = tuple(f"pc{i + 1}" for i in range(k))
    return FeatureMatrix(projected, names, (CONTINUOUS,) * k)


@dataclass(frozen=True)
class OversampleReport:
    original_counts: dict[int, int]
    final_counts: dict[int, int]
    duplicated_indices: tuple[int, ...]


def oversample(
    X: FeatureMatrix, y: np.ndarray, seed: int = 0
) -> tuple[FeatureMatrix, np.ndarray, OversampleReport]:
    """Duplicate minority-class rows (uniform, with replacement, seeded) until
    every present class matches the majority count. Originals come first.
    """
    y = np.asarray(y)
    if X.n_rows == 0:
        raise ValueError("cannot oversample an empty dataset")
    classes = np.unique(y)
    original = {int(c): int(np.sum(y == c)) for c in classes}
    target = max(original.values())

    rng = np.random.default_rng(seed)
    extra: list[int] = []
    for c in classes:
        pool = np.flatnonzero(y == c)
        deficit = target - pool.size
        if deficit > 0:
            extra.extend(int(i) for i in rng.choice(pool, size=deficit, replace=True))

    if extra:
        keep = np.concatenate([np.arange(X.n_rows), np.array(extra, dtype=int)])
        X_out, y_out = X.select_rows(keep), y[keep]
    else:
        X_out, y_out = X, y
    final = {int(c): int(np.sum(y_out == c)) for c in classes}
    return X_out, y_out, OversampleReport(original, final, tuple(extra))
