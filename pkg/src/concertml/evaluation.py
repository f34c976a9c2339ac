"""Metrics, benchmark baselines, confusion matrices, and the seeded synthetic
dataset used for desk-scale end-to-end checks.

The benchmark protocol brackets every classifier between a random-guess lower
bound (1/n_classes) and the training accuracy of the same family configured
to memorize; regression models are compared against the constant-mean
predictor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .city_cluster import CityFeatures
from .data_model import CONCERT_COLUMNS, DAYS, GENRES, RawTable
from .forest import ForestParams, forest_fit
from .kernel_machines import svc_fit
from .linear_models import logistic_fit
from .mlp import TrainConfig, mlp_train


def accuracy(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Fraction of exact matches."""
    y = np.asarray(y)
    y_hat = np.asarray(y_hat)
    if y.shape != y_hat.shape:
        raise ValueError("length mismatch between labels and predictions")
    if y.size == 0:
        raise ValueError("accuracy of empty vectors is undefined")
    return float(np.mean(y == y_hat))


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (k, k) ints, rows = true class
    normalized: np.ndarray  # rows divided by row sums; zero-support rows all-zero
    supported: tuple[bool, ...]  # per true class: has at least one example

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def plain_csv(self) -> str:
        return "\n".join(",".join(str(int(v)) for v in row) for row in self.counts) + "\n"

    def normalized_csv(self) -> str:
        return "\n".join(",".join(repr(float(v)) for v in row) for row in self.normalized) + "\n"


def confusion(y: np.ndarray, y_hat: np.ndarray, n_classes: int = 5) -> ConfusionMatrix:
    y = np.asarray(y, dtype=int)
    y_hat = np.asarray(y_hat, dtype=int)
    if y.shape != y_hat.shape:
        raise ValueError("length mismatch between labels and predictions")
    for name, v in (("true", y), ("predicted", y_hat)):
        if v.size and (v.min() < 0 or v.max() >= n_classes):
            raise ValueError(f"{name} labels fall outside 0..{n_classes - 1}")
    counts = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(counts, (y, y_hat), 1)
    row_sums = counts.sum(axis=1)
    supported = row_sums > 0
    normalized = np.zeros((n_classes, n_classes))
    normalized[supported] = counts[supported] / row_sums[supported, None]
    return ConfusionMatrix(counts, normalized, tuple(bool(s) for s in supported))


@dataclass(frozen=True)
class ConstantRegressor:
    """Predicts the training-target mean on the modeling scale."""

    constant: float
    price_scale_constant: float | None  # exp(mean) when targets are log prices

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.full(X.shape[0], self.constant)


def constant_baseline(y_train: np.ndarray, log_scale: bool = False) -> ConstantRegressor:
    y_train = np.asarray(y_train, dtype=float)
    if y_train.size == 0:
        raise ValueError("cannot build a constant baseline from no targets")
    if np.any(y_train <= 0):
        raise ValueError("baseline targets must be positive")
    mean = float(np.mean(y_train))
    return ConstantRegressor(
        constant=mean,
        price_scale_constant=float(np.exp(mean)) if log_scale else None,
    )


@dataclass(frozen=True)
class RandomGuessClassifier:
    """Uniform seeded labels; the benchmark lower-bound protocol."""

    n_classes: int
    seed: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        rng = np.random.default_rng(self.seed)
        return rng.integers(0, self.n_classes, size=X.shape[0])


def random_guess_baseline(n_classes: int, seed: int = 0) -> RandomGuessClassifier:
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    return RandomGuessClassifier(n_classes=n_classes, seed=seed)


def overfit_upper_bound(family: str, X_train: np.ndarray, y_train: np.ndarray,
                        seed: int = 0, **overrides) -> float:
    """Training accuracy of the family at its memorization settings.

    forest: single unbagged tree, min_samples_leaf 1, unlimited depth, all
    features; mlp: no dropout, 1000 epochs; logistic: maximal C; svc:
    maximal C with a sharp kernel (gamma 1.0 by default, since maximal C at
    a near-flat kernel needs millions of SMO passes to the same end). Not
    every family can reach 1.0; the returned value is whatever memorization
    achieves.
    """
    X_train = np.atleast_2d(np.asarray(X_train, dtype=float))
    y_train = np.asarray(y_train, dtype=int)
    if family == "forest":
        params = ForestParams(
            n_trees=int(overrides.get("n_trees", 1)),
            max_depth=None,
            min_samples_leaf=1,
            feature_subset_size=X_train.shape[1],
            bootstrap=False,
            seed=seed,
        )
        model = forest_fit(X_train, y_train, params)
        return accuracy(y_train, model.predict(X_train))
    if family == "mlp":
        config = TrainConfig(
            dropout=0.0,
            epochs=int(overrides.get("epochs", 1000)),
            learning_rate=float(overrides.get("learning_rate", 0.01)),
            batch_size=int(overrides.get("batch_size", 32)),
            seed=seed,
        )
        model = mlp_train(X_train, y_train, config)
        return model.history[-1].train_accuracy
    if family == "svc":
        model = svc_fit(
            X_train, y_train,
            C=float(overrides.get("C", 1e4)),
            gamma=float(overrides.get("gamma", 1.0)),
            max_iter=int(overrides.get("max_iter", 200_000)),
        )
        return accuracy(y_train, model.predict(X_train))
    if family == "logistic":
        model = logistic_fit(
            X_train, y_train,
            C=1e6, penalty="l2", mode="multinomial",
            epochs=int(overrides.get("epochs", 1000)),
        )
        return accuracy(y_train, model.predict(X_train))
    raise ValueError(f"family {family!r} has no memorization preset")


@dataclass(frozen=True)
class BenchmarkReport:
    """Scores for one task with the protocol bounds attached.

    For classification, ``lower_bound`` is chance (1/n_classes),
    ``upper_bounds`` holds each family's memorization training accuracy, and
    ``improvement_ratio`` is test accuracy / lower bound. For regression the
    baseline entry is the constant-mean model and the bound fields are empty.
    """

    task: str
    train_scores: dict[str, float]
    test_scores: dict[str, float]
    lower_bound: float | None = None
    upper_bounds: dict[str, float] = field(default_factory=dict)
    improvement_ratio: dict[str, float] = field(default_factory=dict)
    split_fingerprint: str = ""
    extras: dict[str, float] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "task": self.task,
            "train_scores": dict(sorted(self.train_scores.items())),
            "test_scores": dict(sorted(self.test_scores.items())),
            "lower_bound": self.lower_bound,
            "upper_bounds": dict(sorted(self.upper_bounds.items())),
            "improvement_ratio": dict(sorted(self.improvement_ratio.items())),
            "split_fingerprint": self.split_fingerprint,
            "extras": dict(sorted(self.extras.items())),
        }


def benchmark_to_text(report: BenchmarkReport) -> str:
    """Plain-text score table (families as columns, metric rows)."""
    families = sorted(set(report.train_scores) | set(report.test_scores))
    metric = "RMSPE" if report.task == "price" else "Accuracy"
    rows: list[tuple[str, list[str]]] = []
    if report.lower_bound is not None:
        rows.append(("Benchmark (Low)", [f"{report.lower_bound:.3f}"] * len(families)))
    if report.upper_bounds:
        rows.append((
            "Benchmark (High)",
            [f"{report.upper_bounds[f]:.3f}" if f in report.upper_bounds else "-"
             for f in families],
        ))
    rows.append((f"Training {metric}",
                 [f"{report.train_scores.get(f, float('nan')):.3f}" for f in families]))
    rows.append((f"Testing {metric}",
                 [f"{report.test_scores.get(f, float('nan')):.3f}" for f in families]))
    if report.improvement_ratio:
        rows.append((
            "Improvement vs Low",
            [f"{report.improvement_ratio[f]:.2f}x" if f in report.improvement_ratio else "-"
             for f in families],
        ))

    label_w = max(len(r[0]) for r in rows)
    col_w = max([len(f) for f in families] + [10])
    lines = [" " * label_w + "  " + "  ".join(f.rjust(col_w) for f in families)]
    for label, cells in rows:
        lines.append(label.ljust(label_w) + "  " + "  ".join(c.rjust(col_w) for c in cells))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Synthetic data with a planted, recoverable class structure.

# Per-class feature bands: centers step linearly with the class index and the
# uniform jitter is narrower than half the step, so bands never overlap and
# the class is exactly recoverable from any one signal feature at zero noise.
_MARKET_HEAT_BASE, _MARKET_HEAT_STEP, _MARKET_HEAT_JITTER = 80.0, 110.0, 44.0
_POPULARITY_BASE, _POPULARITY_STEP, _POPULARITY_JITTER = 0.33, 0.07, 0.028
_LOG_PLAYCOUNT_BASE, _LOG_PLAYCOUNT_STEP, _LOG_PLAYCOUNT_JITTER = 12.5, 1.0, 0.4
_LOG_VENUE_BASE, _LOG_VENUE_STEP, _LOG_VENUE_JITTER = 1.0, 0.45, 0.18

_GENRE_PRICE_COEF = np.linspace(-0.5, 0.5, len(GENRES))
_DAY_PRICE_COEF = np.linspace(-0.3, 0.3, len(DAYS))


@dataclass(frozen=True)
class SyntheticSpec:
    n_rows: int
    n_classes: int = 5
    class_weights: tuple[float, ...] = (0.30, 0.25, 0.20, 0.15, 0.10)
    label_noise: float = 0.0  # prob. of replacing the label by a uniform draw
    price_base: float = 5.0  # log-price intercept
    price_sigma: float = 0.35
    price_genre_scale: float = 0.0  # 0 = prices carry no covariate signal
    price_day_scale: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_rows < 1:
            raise ValueError("n_rows must be >= 1")
        if self.n_classes != len(self.class_weights):
            raise ValueError("class_weights length must equal n_classes")
        if not math.isclose(sum(self.class_weights), 1.0, abs_tol=1e-9):
            raise ValueError("class_weights must sum to 1")
        if not 0.0 <= self.label_noise <= 1.0:
            raise ValueError("label_noise must lie in [0, 1]")
        if self.price_sigma < 0:
            raise ValueError("price_sigma must be >= 0")


@dataclass(frozen=True)
class SyntheticDataset:
    table: RawTable  # full CSV schema, ready for build_design_matrix
    class_labels: np.ndarray  # observed (possibly noisy) labels = Class column
    prices: np.ndarray  # raw price scale = average_price column
    true_labels: np.ndarray  # pre-noise planted classes


def planted_rule_predict(market_heat: np.ndarray) -> np.ndarray:
    """Invert the generative band structure: nearest market-heat center."""
    k = np.round((np.asarray(market_heat, dtype=float) - _MARKET_HEAT_BASE)
                 / _MARKET_HEAT_STEP)
    return np.clip(k, 0, 4).astype(int)


def generate_synthetic(spec: SyntheticSpec) -> SyntheticDataset:
    """Seed-deterministic concert table with planted class structure.

    Signal features (market_heat, concert_popularity, playcount,
    venue_concert_count) sit in disjoint per-class bands; prices are
    log-normal around a genre/day baseline whose effect sizes default to
    zero (priceless-signal regime).
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_rows

    true_k = rng.choice(spec.n_classes, size=n, p=np.asarray(spec.class_weights))
    labels = true_k.copy()
    if spec.label_noise > 0:
        flip = rng.random(n) < spec.label_noise
        labels[flip] = rng.integers(0, spec.n_classes, size=int(flip.sum()))

    jitter = lambda width: rng.uniform(-width, width, size=n)  # noqa: E731
    market_heat = _MARKET_HEAT_BASE + _MARKET_HEAT_STEP * true_k + jitter(_MARKET_HEAT_JITTER)
    popularity = _POPULARITY_BASE + _POPULARITY_STEP * true_k + jitter(_POPULARITY_JITTER)
    playcount = np.exp(_LOG_PLAYCOUNT_BASE + _LOG_PLAYCOUNT_STEP * true_k
                       + jitter(_LOG_PLAYCOUNT_JITTER))
    venue_count = np.exp(_LOG_VENUE_BASE + _LOG_VENUE_STEP * true_k
                         + jitter(_LOG_VENUE_JITTER))

    latitude = rng.uniform(25.0, 48.0, size=n)
    longitude = rng.uniform(-123.0, -71.0, size=n)
    population = np.exp(rng.uniform(11.0, 15.5, size=n))
    income = 17000.0 + 4000.0 * true_k + rng.uniform(-1500.0, 1500.0, size=n)
    density = 1200.0 + 2200.0 * true_k + rng.uniform(-800.0, 800.0, size=n)

    genres_num = rng.integers(1, 4, size=n)
    genre_flags = np.zeros((n, len(GENRES)), dtype=int)
    genre_effect = np.zeros(n)
    for i in range(n):
        picks = rng.choice(len(GENRES), size=genres_num[i], replace=False)
        genre_flags[i, picks] = 1
        genre_effect[i] = float(np.mean(_GENRE_PRICE_COEF[picks]))

    day_idx = rng.integers(0, len(DAYS), size=n)
    day_flags = np.zeros((n, len(DAYS)), dtype=int)
    day_flags[np.arange(n), day_idx] = 1

    venue_type = rng.integers(1, 4, size=n)

    log_price = (
        spec.price_base
        + spec.price_genre_scale * genre_effect
        + spec.price_day_scale * _DAY_PRICE_COEF[day_idx]
        + rng.normal(0.0, spec.price_sigma, size=n)
    )
    prices = np.exp(log_price)

    columns: dict[str, list[str]] = {
        "average_price": [repr(float(v)) for v in prices],
        "latitude": [repr(float(v)) for v in latitude],
        "longitude": [repr(float(v)) for v in longitude],
        "concert_popularity": [repr(float(v)) for v in popularity],
        "playcount": [repr(float(v)) for v in playcount],
        "Population_Estimate_2017": [repr(float(v)) for v in population],
        "market_heat": [repr(float(v)) for v in market_heat],
        "Estimated_per_capita_income": [repr(float(v)) for v in income],
        "Population_density": [repr(float(v)) for v in density],
        "Class": [str(int(v)) for v in labels],
        "genres_num": [str(int(v)) for v in genres_num],
        "venue_concert_count": [repr(float(v)) for v in venue_count],
        "venue_type": [str(int(v)) for v in venue_type],
    }
    for j, g in enumerate(GENRES):
        columns[g] = [str(int(v)) for v in genre_flags[:, j]]
    for j, d in enumerate(DAYS):
        columns[d] = [str(int(v)) for v in day_flags[:, j]]

    cells = tuple(
        tuple(columns[name][i] for name in CONCERT_COLUMNS) for i in range(n)
    )
    return SyntheticDataset(
        table=RawTable(CONCERT_COLUMNS, cells),
        class_labels=labels,
        prices=prices,
        true_labels=true_k,
    )


_CITY_CENTERS = (
    (16000.0, 1200.0),
    (22000.0, 2800.0),
    (28000.0, 5200.0),
    (36000.0, 9000.0),
    (46000.0, 16000.0),
)


def generate_cities(n_cities: int, seed: int = 0, k: int = 5) -> list[CityFeatures]:
    """Seeded city table drawn from k well-separated (income, density) blobs."""
    if k > len(_CITY_CENTERS):
        raise ValueError(f"at most {len(_CITY_CENTERS)} planted blobs available")
    rng = np.random.default_rng(seed)
    cities = []
    for i in range(n_cities):
        cx, cy = _CITY_CENTERS[i % k]
        income = max(0.0, cx + rng.normal(0.0, 900.0))
        density = max(0.0, cy + rng.normal(0.0, 350.0))
        cities.append(CityFeatures(f"city_{i:04d}", income, density))
    return cities
