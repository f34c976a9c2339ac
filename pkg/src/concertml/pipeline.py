"""End-to-end task assembly: preprocessing, family dispatch, scoring,
hyperparameter-search evaluators, and the benchmark protocol runners.

Pipeline order is impute -> dummies -> log -> minmax -> (optional PCA inside
logistic) -> model. The price target is modeled on the log scale by default
and every regression report carries RMSPE on both the modeling and the raw
price scale.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .bundle import ModelBundle
from .city_cluster import KMeansModel
from .data_model import (
    FeatureMatrix,
    RawTable,
    SplitSpec,
    build_design_matrix,
    build_features,
    train_test_split,
)
from .evaluation import (
    BenchmarkReport,
    ConstantRegressor,
    accuracy,
    confusion,
    constant_baseline,
    overfit_upper_bound,
)
from .forest import ForestParams, RandomForest, forest_fit
from .kernel_machines import SvcModel, SvrModel, svc_fit, svr_fit
from .linear_models import LogisticModel, SgdConfig, SgdRegressor, logistic_fit, rmspe, sgd_fit
from .mlp import MlpModel, TrainConfig, mlp_train
from .preprocess import (
    DEFAULT_LOG_COLUMNS,
    LogSpec,
    OversampleReport,
    ScalerState,
    apply_minmax,
    fit_minmax,
    log_target,
    log_transform,
    oversample,
)
from .tuning import SEARCH_PRESETS, ParamSpace, TrialResult, grid_search, random_search

PRICE_FAMILIES = ("constant", "sgd", "svr")
LOCATION_FAMILIES = ("logistic", "svc", "forest", "mlp")

FAMILY_DEFAULTS: dict[str, dict] = {
    "sgd": {"penalty": "l2", "alpha": 0.1, "degree": 0,
            "learning_rate": 0.1, "epochs": 400, "batch_size": 64},
    "svr": {"C": 0.5, "gamma": 0.01, "epsilon": 2.0},
    "logistic": {"C": 0.1, "penalty": "l1", "mode": "multinomial",
                 "pca_components": 0, "learning_rate": 0.5, "epochs": 300},
    "svc": {"C": 10.0, "gamma": 0.01},
    "forest": {"n_trees": 105, "max_depth": 47, "min_samples_leaf": 10},
    "mlp": {"hidden_sizes": (64, 16, 16), "dropout": 0.2, "learning_rate": 0.05,
            "epochs": 200, "batch_size": 32},
    "constant": {},
}


@dataclass(frozen=True)
class PipelineSettings:
    task: str
    family: str
    seed: int = 0
    test_fraction: float = 0.2
    log_columns: tuple[str, ...] = DEFAULT_LOG_COLUMNS
    oversample_training: bool = True  # location task only
    model_params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.task not in ("price", "location"):
            raise ValueError(f"unknown task {self.task!r}")
        allowed = PRICE_FAMILIES if self.task == "price" else LOCATION_FAMILIES
        if self.family not in allowed:
            raise ValueError(
                f"family {self.family!r} not available for task {self.task}; "
                f"choose from {', '.join(allowed)}"
            )


@dataclass(frozen=True)
class PreparedTask:
    """Split, transformed matrices plus the fitted preprocessing states."""

    task: str
    log_spec: LogSpec
    scaler: ScalerState
    x_train: FeatureMatrix
    x_test: FeatureMatrix
    y_train: np.ndarray  # modeling scale (log price / class labels)
    y_test: np.ndarray
    raw_train: np.ndarray | None  # raw price scale; None for location
    raw_test: np.ndarray | None
    train_indices: np.ndarray
    test_indices: np.ndarray
    log_price_target: bool

    @property
    def split_fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.asarray(self.train_indices, dtype=np.int64).tobytes())
        h.update(b"|")
        h.update(np.asarray(self.test_indices, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]


def table_fingerprint(table: RawTable) -> str:
    h = hashlib.sha256()
    h.update("\x1f".join(table.columns).encode())
    for row in table.cells:
        h.update("\x1f".join("" if c is None else c for c in row).encode())
        h.update(b"\x1e")
    return h.hexdigest()


def prepare_task(
    table: RawTable,
    task: str,
    seed: int = 0,
    test_fraction: float = 0.2,
    log_columns: tuple[str, ...] = DEFAULT_LOG_COLUMNS,
) -> PreparedTask:
    X, y = build_design_matrix(table, task)
    log_spec = LogSpec(tuple(log_columns))
    X = log_transform(X, log_spec)

    log_price = task == "price" and "average_price" in log_columns
    y_model = log_target(y) if log_price else y

    split = train_test_split(X, y_model, SplitSpec(test_fraction, seed))
    scaler = fit_minmax(split.x_train)
    raw_train = raw_test = None
    if task == "price":
        raw = np.asarray(y, dtype=float)
        raw_train, raw_test = raw[split.train_indices], raw[split.test_indices]
    return PreparedTask(
        task=task,
        log_spec=log_spec,
        scaler=scaler,
        x_train=apply_minmax(split.x_train, scaler),
        x_test=apply_minmax(split.x_test, scaler),
        y_train=split.y_train,
        y_test=split.y_test,
        raw_train=raw_train,
        raw_test=raw_test,
        train_indices=split.train_indices,
        test_indices=split.test_indices,
        log_price_target=log_price,
    )


FittedModel = (
    SgdRegressor | SvrModel | LogisticModel | SvcModel | RandomForest
    | MlpModel | ConstantRegressor
)


def fit_family(
    task: str,
    family: str,
    X: FeatureMatrix,
    y: np.ndarray,
    seed: int = 0,
    params: dict | None = None,
    oversample_training: bool = True,
    validation: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[FittedModel, OversampleReport | None]:
    """Fit one model family on already-transformed data."""
    merged = dict(FAMILY_DEFAULTS[family])
    merged.update(params or {})

    report = None
    if task == "location" and oversample_training:
        X, y, report = oversample(X, y, seed=seed)

    if family == "constant":
        return constant_baseline(y, log_scale=True), report
    if family == "sgd":
        config = SgdConfig(seed=seed, **merged)
        return sgd_fit(X, y, config), report
    if family == "svr":
        return svr_fit(X.values, y, **merged), report
    if family == "logistic":
        return logistic_fit(X, y, seed=seed, **merged), report
    if family == "svc":
        return svc_fit(X.values, y, **merged), report
    if family == "forest":
        param_fields = {k: merged.pop(k) for k in list(merged)
                        if k in ("n_trees", "max_depth", "min_samples_leaf",
                                 "feature_subset_size", "bootstrap")}
        return forest_fit(X.values, y, ForestParams(seed=seed, **param_fields)), report
    if family == "mlp":
        if "hidden_sizes" in merged:
            merged["hidden_sizes"] = tuple(merged["hidden_sizes"])
        config = TrainConfig(seed=seed, **merged)
        X_val = y_val = None
        if validation is not None:
            X_val, y_val = validation
        return mlp_train(X.values, y, config, X_val=X_val, y_val=y_val), report
    raise ValueError(f"unknown family {family!r}")


def predict_family(family: str, model: FittedModel, X: FeatureMatrix) -> np.ndarray:
    """Model-scale predictions (log price / class labels) for scaled input."""
    if family == "mlp":
        from .mlp import mlp_forward

        return np.argmax(mlp_forward(model, X.values), axis=1)
    if family in ("constant", "svr", "svc", "forest"):
        return model.predict(X.values)
    return model.predict(X)


def score_price(prep: PreparedTask, family: str, model: FittedModel) -> dict[str, float]:
    """RMSPE on the modeling scale plus the raw price scale, train and test."""
    out = {}
    for split_name, X, y_model, y_raw in (
        ("train", prep.x_train, prep.y_train, prep.raw_train),
        ("test", prep.x_test, prep.y_test, prep.raw_test),
    ):
        pred = predict_family(family, model, X)
        out[f"{split_name}_rmspe"] = rmspe(y_model, pred)
        if prep.log_price_target:
            out[f"{split_name}_rmspe_price_scale"] = rmspe(y_raw, np.exp(pred))
        else:
            out[f"{split_name}_rmspe_price_scale"] = out[f"{split_name}_rmspe"]
    return out


def score_location(prep: PreparedTask, family: str, model: FittedModel) -> dict[str, float]:
    return {
        "train_accuracy": accuracy(prep.y_train, predict_family(family, model, prep.x_train)),
        "test_accuracy": accuracy(prep.y_test, predict_family(family, model, prep.x_test)),
    }


@dataclass(frozen=True)
class TrainOutcome:
    settings: PipelineSettings
    prepared: PreparedTask
    model: FittedModel
    scores: dict[str, float]
    oversample_report: OversampleReport | None
    hyperparameters: dict


def train_task(table: RawTable, settings: PipelineSettings) -> TrainOutcome:
    prep = prepare_task(
        table, settings.task, settings.seed, settings.test_fraction,
        settings.log_columns,
    )
    merged = dict(FAMILY_DEFAULTS[settings.family])
    merged.update(settings.model_params)
    validation = None
    if settings.family == "mlp":
        validation = (prep.x_test.values, prep.y_test)  # per-epoch test curve
    model, ov_report = fit_family(
        settings.task, settings.family, prep.x_train, prep.y_train,
        seed=settings.seed, params=settings.model_params,
        oversample_training=settings.oversample_training,
        validation=validation,
    )
    scores = (
        score_price(prep, settings.family, model)
        if settings.task == "price"
        else score_location(prep, settings.family, model)
    )
    return TrainOutcome(
        settings=settings,
        prepared=prep,
        model=model,
        scores=scores,
        oversample_report=ov_report,
        hyperparameters=merged,
    )


def make_evaluator(
    prep: PreparedTask,
    task: str,
    family: str,
    inner_seed: int = 0,
    inner_fraction: float = 0.2,
    oversample_training: bool = True,
):
    """Scoring protocol for searches: a fixed seeded 80/20 split inside the
    training set; returns RMSPE (minimize) or accuracy (maximize)."""
    inner = train_test_split(prep.x_train, prep.y_train,
                             SplitSpec(inner_fraction, inner_seed))

    def evaluate(params: dict, trial_seed: int):
        model, _ = fit_family(
            task, family, inner.x_train, inner.y_train,
            seed=trial_seed, params=params,
            oversample_training=oversample_training,
        )
        pred = predict_family(family, model, inner.x_test)
        if task == "price":
            return rmspe(inner.y_test, pred)
        return accuracy(inner.y_test, pred)

    return evaluate


@dataclass(frozen=True)
class TuneOutcome:
    best: TrialResult
    trials: list[TrialResult]
    refit: TrainOutcome


def tune_task(
    table: RawTable,
    task: str,
    family: str,
    method: str = "random",
    n_trials: int = 50,
    seed: int = 0,
    space: ParamSpace | None = None,
    test_fraction: float = 0.2,
    oversample_training: bool = True,
) -> TuneOutcome:
    """Search the family's space on the inner protocol, then refit the best
    configuration on the full training split."""
    if family not in SEARCH_PRESETS and space is None:
        raise ValueError(f"no search preset for family {family!r}; provide a space")
    space = space or SEARCH_PRESETS[family]()
    prep = prepare_task(table, task, seed, test_fraction)
    evaluate = make_evaluator(prep, task, family,
                              oversample_training=oversample_training)
    direction = "min" if task == "price" else "max"
    if method == "grid":
        best, trials = grid_search(space, evaluate, direction=direction, seed=seed)
    elif method == "random":
        best, trials = random_search(space, n_trials, seed, evaluate, direction=direction)
    else:
        raise ValueError(f"unknown search method {method!r}")

    settings = PipelineSettings(
        task=task, family=family, seed=seed, test_fraction=test_fraction,
        oversample_training=oversample_training, model_params=dict(best.params),
    )
    return TuneOutcome(best=best, trials=trials, refit=train_task(table, settings))


def benchmark_task(
    table: RawTable,
    task: str,
    seed: int = 0,
    families: tuple[str, ...] | None = None,
    model_params: dict[str, dict] | None = None,
    upper_bound_overrides: dict | None = None,
) -> tuple[BenchmarkReport, dict[str, object]]:
    """Fit every family for the task on one shared split and benchmark it.

    Classification reports chance (1/n_classes) as the lower bound and each
    family's memorization training accuracy as the upper bound; regression
    reports the constant-mean model alongside the learned families.
    Returns the report plus per-family artifacts (confusions, histories).
    """
    model_params = model_params or {}
    prep = prepare_task(table, task, seed)
    artifacts: dict[str, object] = {}

    if task == "price":
        families = families or PRICE_FAMILIES
        train_scores, test_scores, extras = {}, {}, {}
        for family in families:
            model, _ = fit_family(task, family, prep.x_train, prep.y_train,
                                  seed=seed, params=model_params.get(family))
            scores = score_price(prep, family, model)
            train_scores[family] = scores["train_rmspe"]
            test_scores[family] = scores["test_rmspe"]
            extras[f"{family}_train_rmspe_price_scale"] = scores["train_rmspe_price_scale"]
            extras[f"{family}_test_rmspe_price_scale"] = scores["test_rmspe_price_scale"]
            if family == "constant" and prep.log_price_target:
                # emitted for both candidate fitting sets: the train split and
                # the full table
                extras["constant_price_scale_value"] = float(np.exp(np.mean(prep.y_train)))
                full = np.concatenate([prep.y_train, prep.y_test])
                extras["constant_price_scale_value_full"] = float(np.exp(np.mean(full)))
        report = BenchmarkReport(
            task=task, train_scores=train_scores, test_scores=test_scores,
            split_fingerprint=prep.split_fingerprint, extras=extras,
        )
        return report, artifacts

    families = families or LOCATION_FAMILIES
    lower = 1.0 / 5.0
    train_scores, test_scores, uppers, ratios = {}, {}, {}, {}
    for family in families:
        validation = (prep.x_test.values, prep.y_test) if family == "mlp" else None
        model, _ = fit_family(task, family, prep.x_train, prep.y_train,
                              seed=seed, params=model_params.get(family),
                              validation=validation)
        scores = score_location(prep, family, model)
        train_scores[family] = scores["train_accuracy"]
        test_scores[family] = scores["test_accuracy"]
        ratios[family] = scores["test_accuracy"] / lower
        overrides = dict(upper_bound_overrides or {})
        uppers[family] = overfit_upper_bound(
            family, prep.x_train.values, prep.y_train, seed=seed, **overrides
        )
        artifacts[f"confusion_{family}"] = confusion(
            prep.y_test, predict_family(family, model, prep.x_test)
        )
        if family == "mlp":
            artifacts["mlp_model"] = model
    report = BenchmarkReport(
        task=task, train_scores=train_scores, test_scores=test_scores,
        lower_bound=lower, upper_bounds=uppers, improvement_ratio=ratios,
        split_fingerprint=prep.split_fingerprint,
    )
    return report, artifacts

def make_bundle(
    outcome: TrainOutcome,
    data_fingerprint: str = "",
    kmeans: KMeansModel | None = None,
) -> ModelBundle:
    """Package a training outcome with its preprocessing states."""
    prep = outcome.prepared
    s = outcome.settings
    ov = outcome.oversample_report
    metadata = {
        "family": s.family,
        "task": s.task,
        "seed": s.seed,
        "test_fraction": s.test_fraction,
        "log_price_target": prep.log_price_target,
        "data_fingerprint": data_fingerprint,
        "split_fingerprint": prep.split_fingerprint,
        "n_train": int(len(prep.y_train)),
        "n_test": int(len(prep.y_test)),
        "hyperparameters": _jsonable(outcome.hyperparameters),
        "scores": {k: float(v) for k, v in sorted(outcome.scores.items())},
        "oversample": None if ov is None else {
            "original_counts": {str(k): v for k, v in sorted(ov.original_counts.items())},
            "final_counts": {str(k): v for k, v in sorted(ov.final_counts.items())},
            "n_duplicates": len(ov.duplicated_indices),
        },
    }
    return ModelBundle(
        task=s.task,
        feature_columns=prep.x_train.column_names,
        column_kinds=prep.x_train.column_kinds,
        log_spec=prep.log_spec,
        scaler=prep.scaler,
        models={s.family: outcome.model},
        kmeans=kmeans,
        metadata=metadata,
    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def bundle_transform(bundle: ModelBundle, table: RawTable) -> FeatureMatrix:
    """Apply the bundle's fitted preprocessing to a schema table."""
    X = build_features(table, bundle.task)
    X = log_transform(X, bundle.log_spec)
    return apply_minmax(X, bundle.scaler)


def _primary_family(bundle: ModelBundle) -> str:
    family = bundle.metadata.get("family")
    if family in bundle.models:
        return family
    return sorted(bundle.models)[0]


def family_predict_proba(family: str, model: FittedModel, X: FeatureMatrix) -> np.ndarray:
    """Class distributions; SVC (uncalibrated) yields a one-hot argmax row."""
    if family == "logistic":
        return model.predict_proba(X)
    if family == "forest":
        return model.predict_proba(X.values)
    if family == "mlp":
        from .mlp import mlp_forward

        return mlp_forward(model, X.values)
    if family == "svc":
        labels = model.predict(X.values)
        out = np.zeros((len(labels), model.n_classes))
        out[np.arange(len(labels)), labels] = 1.0
        return out
    raise ValueError(f"family {family!r} has no class-probability output")


def bundle_predict_location(bundle: ModelBundle, X: FeatureMatrix) -> dict[str, np.ndarray]:
    family = _primary_family(bundle)
    probs = family_predict_proba(family, bundle.models[family], X)
    return {"probabilities": probs, "classes": np.argmax(probs, axis=1)}


def bundle_predict_price(bundle: ModelBundle, X: FeatureMatrix) -> dict[str, np.ndarray]:
    family = _primary_family(bundle)
    pred = predict_family(family, bundle.models[family], X)
    if bundle.metadata.get("log_price_target", True):
        return {"price": np.exp(pred), "model_scale": pred}
    return {"price": pred, "model_scale": pred}
