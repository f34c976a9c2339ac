"""K-means clustering of cities into economic classes.

Cities are clustered on (income per capita, population density), z-scored
first because the two features live on incompatible scales. Class indices are
relabeled by ascending centroid income so "class 0" always means the
lowest-income cluster regardless of seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CITY_CSV_COLUMNS = ("city", "income_per_capita", "population_density")


@dataclass(frozen=True)
class CityFeatures:
    name: str
    income_per_capita: float
    population_density: float

    def __post_init__(self) -> None:
        for v, what in (
            (self.income_per_capita, "income_per_capita"),
            (self.population_density, "population_density"),
        ):
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{what} must be finite and >= 0, got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([self.income_per_capita, self.population_density])


@dataclass(frozen=True)
class KMeansModel:
    k: int
    centroids: np.ndarray  # (k, 2) in standardized space, income-ordered
    feature_means: np.ndarray
    feature_stds: np.ndarray
    inertia: float
    seed: int
    n_restarts: int
    inertia_history: tuple[float, ...]  # winning restart, one entry per Lloyd pass
    fit_labels: tuple[int, ...]  # assignment of the fitting cities

    def centroids_original_units(self) -> np.ndarray:
        return self.centroids * self.feature_stds + self.feature_means


def _standardize(points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    means = points.mean(axis=0)
    stds = points.std(axis=0)
    stds = np.where(stds == 0, 1.0, stds)
    return (points - means) / stds, means, stds


def _plusplus_seeds(Z: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each next centroid drawn with prob proportional to
    its squared distance from the nearest chosen one."""
    n = Z.shape[0]
    centroids = np.empty((k, Z.shape[1]))
    centroids[0] = Z[rng.integers(n)]
    d2 = np.sum((Z - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            # all remaining mass on already-chosen points; take any unused distinct one
            unused = np.flatnonzero(d2 > 0)
            idx = int(unused[0]) if unused.size else int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[j] = Z[idx]
        d2 = np.minimum(d2, np.sum((Z - centroids[j]) ** 2, axis=1))
    return centroids


def _lloyd(
    Z: np.ndarray, centroids: np.ndarray, rng: np.random.Generator, max_iter: int = 300
) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    n, k = Z.shape[0], centroids.shape[0]
    labels = np.full(n, -1)
    history: list[float] = []
    for _ in range(max_iter):
        d2 = ((Z[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)  # ties -> lowest index
        inertia = float(d2[np.arange(n), new_labels].sum())
        history.append(inertia)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            mask = labels == j
            if np.any(mask):
                centroids[j] = Z[mask].mean(axis=0)
            else:
                # reseed an empty cluster to the point farthest from its centroid
                dist_to_own = d2[np.arange(n), labels]
                centroids[j] = Z[int(np.argmax(dist_to_own))]
    return centroids, labels, history[-1], history


def kmeans_fit(
    points: list[CityFeatures] | np.ndarray,
    k: int = 5,
    seed: int = 0,
    n_restarts: int = 10,
) -> KMeansModel:
    """Best-of-restarts Lloyd iterations with k-means++ seeding.

    Each restart draws from its own derived seed, so the result depends only
    on (seed, n_restarts). Classes are relabeled by ascending centroid income.
    """
    if isinstance(points, np.ndarray):
        raw = np.asarray(points, dtype=float)
    else:
        raw = np.array([p.as_array() for p in points])
    if raw.ndim != 2 or raw.shape[1] != 2:
        raise ValueError("expected an (n, 2) array of (income, density) rows")
    distinct = np.unique(raw, axis=0).shape[0]
    if distinct < k:
        raise ValueError(f"need at least {k} distinct points, got {distinct}")

    Z, means, stds = _standardize(raw)

    best: tuple[float, int, np.ndarray, np.ndarray, list[float]] | None = None
    for r in range(n_restarts):
        rng = np.random.default_rng([seed, r])
        centroids = _plusplus_seeds(Z.copy(), k, rng)
        centroids, labels, inertia, history = _lloyd(Z, centroids, rng)
        if best is None or inertia < best[0]:
            best = (inertia, r, centroids, labels, history)

    inertia, _, centroids, labels, history = best
    # deterministic meaning: order classes by centroid income in original units
    income = centroids[:, 0] * stds[0] + means[0]
    order = np.argsort(income, kind="stable")
    relabel = np.empty(k, dtype=int)
    relabel[order] = np.arange(k)
    return KMeansModel(
        k=k,
        centroids=centroids[order].copy(),
        feature_means=means,
        feature_stds=stds,
        inertia=inertia,
        seed=seed,
        n_restarts=n_restarts,
        inertia_history=tuple(history),
        fit_labels=tuple(int(relabel[l]) for l in labels),
    )


def assign_class(city: CityFeatures | np.ndarray, model: KMeansModel) -> int:
    """Nearest centroid in standardized space; ties go to the lowest class."""
    point = city.as_array() if isinstance(city, CityFeatures) else np.asarray(city, dtype=float)
    z = (point - model.feature_means) / model.feature_stds
    d2 = ((model.centroids - z) ** 2).sum(axis=1)
    return int(np.argmin(d2))


def load_city_csv(path: str | Path) -> list[CityFeatures]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CITY_CSV_COLUMNS:
            raise ValueError(
                f"{path}: city table header must be exactly {','.join(CITY_CSV_COLUMNS)}"
            )
        return [CityFeatures(row[0], float(row[1]), float(row[2])) for row in reader]


def write_city_csv(cities: list[CityFeatures], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CITY_CSV_COLUMNS)
        for c in cities:
            writer.writerow([c.name, repr(c.income_per_capita), repr(c.population_density)])
