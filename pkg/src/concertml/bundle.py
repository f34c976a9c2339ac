"""Versioned model bundles: preprocessing states, the city clustering model,
and fitted predictors serialized together so predictions can never run
against mismatched transforms.

Bundles are canonical JSON (sorted keys, compact separators, trailing
newline); loading and re-serializing is byte-stable. docs/bundle.md documents
every field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .city_cluster import KMeansModel
from .data_model import FeatureMatrix
from .evaluation import ConstantRegressor
from .forest import ForestParams, RandomForest, TreeNode
from .kernel_machines import BinarySvm, SvcModel, SvrModel
from .linear_models import LogisticModel, SgdConfig, SgdRegressor
from .mlp import EpochStats, MlpModel, TrainConfig
from .preprocess import LogSpec, PcaState, ScalerState

BUNDLE_FORMAT_VERSION = 1


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def _arr(a: np.ndarray) -> list:
    return np.asarray(a, dtype=float).tolist()


def _log_spec_dict(spec: LogSpec) -> dict:
    return {"columns": list(spec.columns), "offsets": dict(spec.offsets)}


def _log_spec_load(d: dict) -> LogSpec:
    return LogSpec(tuple(d["columns"]), dict(d["offsets"]))


def _scaler_dict(s: ScalerState) -> dict:
    return {"column_names": list(s.column_names), "mins": _arr(s.mins), "maxs": _arr(s.maxs)}


def _scaler_load(d: dict) -> ScalerState:
    return ScalerState(tuple(d["column_names"]), np.array(d["mins"]), np.array(d["maxs"]))


def _pca_dict(p: PcaState | None) -> dict | None:
    if p is None:
        return None
    return {
        "components": _arr(p.components),
        "means": _arr(p.means),
        "explained_variance": _arr(p.explained_variance),
        "column_names": list(p.column_names),
    }


def _pca_load(d: dict | None) -> PcaState | None:
    if d is None:
        return None
    return PcaState(
        np.array(d["components"]), np.array(d["means"]),
        np.array(d["explained_variance"]), tuple(d["column_names"]),
    )


def _kmeans_dict(m: KMeansModel | None) -> dict | None:
    if m is None:
        return None
    return {
        "k": m.k,
        "centroids": _arr(m.centroids),
        "feature_means": _arr(m.feature_means),
        "feature_stds": _arr(m.feature_stds),
        "inertia": m.inertia,
        "seed": m.seed,
        "n_restarts": m.n_restarts,
        "inertia_history": list(m.inertia_history),
        "fit_labels": list(m.fit_labels),
    }


def _kmeans_load(d: dict | None) -> KMeansModel | None:
    if d is None:
        return None
    return KMeansModel(
        k=int(d["k"]),
        centroids=np.array(d["centroids"]),
        feature_means=np.array(d["feature_means"]),
        feature_stds=np.array(d["feature_stds"]),
        inertia=float(d["inertia"]),
        seed=int(d["seed"]),
        n_restarts=int(d["n_restarts"]),
        inertia_history=tuple(float(v) for v in d["inertia_history"]),
        fit_labels=tuple(int(v) for v in d["fit_labels"]),
    )


def _tree_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"c": list(node.counts)}
    return {
        "f": node.feature,
        "t": node.threshold,
        "l": _tree_dict(node.left),
        "r": _tree_dict(node.right),
    }


def _tree_load(d: dict) -> TreeNode:
    if "c" in d:
        return TreeNode(counts=tuple(int(v) for v in d["c"]))
    return TreeNode(
        feature=int(d["f"]), threshold=float(d["t"]),
        left=_tree_load(d["l"]), right=_tree_load(d["r"]),
    )


def _model_dict(family: str, model) -> dict:
    if family == "constant":
        return {"constant": model.constant,
                "price_scale_constant": model.price_scale_constant}
    if family == "sgd":
        c = model.config
        return {
            "weights": _arr(model.weights),
            "intercept": model.intercept,
            "config": {
                "penalty": c.penalty, "alpha": c.alpha, "degree": c.degree,
                "learning_rate": c.learning_rate, "epochs": c.epochs,
                "batch_size": c.batch_size, "seed": c.seed,
            },
            "feature_names": list(model.feature_names),
            "train_rmspe": model.train_rmspe,
        }
    if family == "svr":
        return {
            "support_vectors": _arr(model.support_vectors),
            "n_features": int(model.support_vectors.shape[1]),
            "dual_coef": _arr(model.dual_coef),
            "bias": model.bias,
            "C": model.C, "gamma": model.gamma, "epsilon": model.epsilon,
            "dual_objective": model.dual_objective,
            "iterations": model.iterations,
            "kkt_violation": model.kkt_violation,
            "slack_summary": dict(model.slack_summary),
        }
    if family == "svc":
        return {
            "C": model.C, "gamma": model.gamma, "n_classes": model.n_classes,
            "machines": {
                str(k): {
                    "support_vectors": _arr(m.support_vectors),
                    "n_features": int(m.support_vectors.shape[1]),
                    "signed_coef": _arr(m.signed_coef),
                    "bias": m.bias,
                    "dual_objective": m.dual_objective,
                    "iterations": m.iterations,
                    "kkt_violation": m.kkt_violation,
                    "alpha_y_residual": m.alpha_y_residual,
                }
                for k, m in model.machines.items()
            },
        }
    if family == "logistic":
        return {
            "weights": _arr(model.weights),
            "biases": _arr(model.biases),
            "C": model.C, "penalty": model.penalty, "mode": model.mode,
            "classes": list(model.classes),
            "pca": _pca_dict(model.pca),
        }
    if family == "forest":
        p = model.params
        return {
            "trees": [_tree_dict(t) for t in model.trees],
            "params": {
                "n_trees": p.n_trees, "max_depth": p.max_depth,
                "min_samples_leaf": p.min_samples_leaf,
                "feature_subset_size": p.feature_subset_size,
                "bootstrap": p.bootstrap, "seed": p.seed,
            },
            "n_classes": model.n_classes,
        }
    if family == "mlp":
        c = model.config
        return {
            "weights": [_arr(w) for w in model.weights],
            "biases": [_arr(b) for b in model.biases],
            "config": {
                "hidden_sizes": list(c.hidden_sizes),
                "dropout": list(c.dropout),
                "learning_rate": c.learning_rate, "epochs": c.epochs,
                "batch_size": c.batch_size, "seed": c.seed,
                "early_stopping_patience": c.early_stopping_patience,
                "n_classes": c.n_classes,
            },
            "history": [
                {"loss": h.loss, "train_accuracy": h.train_accuracy,
                 "val_accuracy": h.val_accuracy}
                for h in model.history
            ],
        }
    raise ValueError(f"cannot serialize unknown family {family!r}")


def _model_load(family: str, d: dict):
    if family == "constant":
        return ConstantRegressor(float(d["constant"]),
                                 None if d["price_scale_constant"] is None
                                 else float(d["price_scale_constant"]))
    if family == "sgd":
        c = d["config"]
        return SgdRegressor(
            weights=np.array(d["weights"]),
            intercept=float(d["intercept"]),
            config=SgdConfig(
                penalty=c["penalty"], alpha=c["alpha"], degree=c["degree"],
                learning_rate=c["learning_rate"], epochs=c["epochs"],
                batch_size=c["batch_size"], seed=c["seed"],
            ),
            feature_names=tuple(d["feature_names"]),
            train_rmspe=float(d["train_rmspe"]),
        )
    if family == "svr":
        return SvrModel(
            support_vectors=np.array(d["support_vectors"], dtype=float).reshape(
                len(d["support_vectors"]), int(d["n_features"])),
            dual_coef=np.array(d["dual_coef"]),
            bias=float(d["bias"]),
            C=float(d["C"]), gamma=float(d["gamma"]), epsilon=float(d["epsilon"]),
            dual_objective=float(d["dual_objective"]),
            iterations=int(d["iterations"]),
            kkt_violation=float(d["kkt_violation"]),
            slack_summary=dict(d["slack_summary"]),
        )
    if family == "svc":
        machines = {
            int(k): BinarySvm(
                support_vectors=np.array(m["support_vectors"], dtype=float).reshape(
                    len(m["support_vectors"]), int(m["n_features"])),
                signed_coef=np.array(m["signed_coef"]),
                bias=float(m["bias"]),
                dual_objective=float(m["dual_objective"]),
                iterations=int(m["iterations"]),
                kkt_violation=float(m["kkt_violation"]),
                alpha_y_residual=float(m["alpha_y_residual"]),
            )
            for k, m in d["machines"].items()
        }
        return SvcModel(machines=machines, C=float(d["C"]),
                        gamma=float(d["gamma"]), n_classes=int(d["n_classes"]))
    if family == "logistic":
        return LogisticModel(
            weights=np.array(d["weights"]),
            biases=np.array(d["biases"]),
            C=float(d["C"]), penalty=d["penalty"], mode=d["mode"],
            classes=tuple(int(c) for c in d["classes"]),
            pca=_pca_load(d["pca"]),
        )
    if family == "forest":
        p = d["params"]
        return RandomForest(
            trees=tuple(_tree_load(t) for t in d["trees"]),
            params=ForestParams(
                n_trees=p["n_trees"], max_depth=p["max_depth"],
                min_samples_leaf=p["min_samples_leaf"],
                feature_subset_size=p["feature_subset_size"],
                bootstrap=p["bootstrap"], seed=p["seed"],
            ),
            n_classes=int(d["n_classes"]),
        )
    if family == "mlp":
        c = d["config"]
        return MlpModel(
            weights=tuple(np.array(w) for w in d["weights"]),
            biases=tuple(np.array(b) for b in d["biases"]),
            config=TrainConfig(
                hidden_sizes=tuple(c["hidden_sizes"]),
                dropout=tuple(c["dropout"]),
                learning_rate=c["learning_rate"], epochs=c["epochs"],
                batch_size=c["batch_size"], seed=c["seed"],
                early_stopping_patience=c["early_stopping_patience"],
                n_classes=c["n_classes"],
            ),
            history=tuple(
                EpochStats(h["loss"], h["train_accuracy"], h["val_accuracy"])
                for h in d["history"]
            ),
        )
    raise ValueError(f"cannot load unknown family {family!r}")


@dataclass(frozen=True)
class ModelBundle:
    task: str
    feature_columns: tuple[str, ...]
    column_kinds: tuple[str, ...]
    log_spec: LogSpec
    scaler: ScalerState
    models: dict[str, object]
    kmeans: KMeansModel | None = None
    metadata: dict = field(default_factory=dict)
    version: int = BUNDLE_FORMAT_VERSION

    def __post_init__(self) -> None:
        if self.version != BUNDLE_FORMAT_VERSION:
            raise ValueError(f"unrecognized bundle format version {self.version}")
        missing = [n for n in self.scaler.column_names if n not in self.feature_columns]
        if missing:
            raise ValueError(f"scaler references unknown columns: {', '.join(missing)}")

    def design_matrix(self, values: np.ndarray) -> FeatureMatrix:
        return FeatureMatrix(values, self.feature_columns, self.column_kinds)

    def to_json_dict(self) -> dict:
        return {
            "format_version": self.version,
            "task": self.task,
            "feature_columns": list(self.feature_columns),
            "column_kinds": list(self.column_kinds),
            "log_spec": _log_spec_dict(self.log_spec),
            "scaler": _scaler_dict(self.scaler),
            "kmeans": _kmeans_dict(self.kmeans),
            "models": {fam: _model_dict(fam, m) for fam, m in self.models.items()},
            "metadata": self.metadata,
        }


def bundle_from_json_dict(d: dict) -> ModelBundle:
    version = int(d.get("format_version", -1))
    if version != BUNDLE_FORMAT_VERSION:
        raise ValueError(f"unrecognized bundle format version {version}")
    return ModelBundle(
        task=d["task"],
        feature_columns=tuple(d["feature_columns"]),
        column_kinds=tuple(d["column_kinds"]),
        log_spec=_log_spec_load(d["log_spec"]),
        scaler=_scaler_load(d["scaler"]),
        kmeans=_kmeans_load(d["kmeans"]),
        models={fam: _model_load(fam, md) for fam, md in d["models"].items()},
        metadata=dict(d["metadata"]),
        version=version,
    )


def save_bundle(bundle: ModelBundle, path: str | Path) -> None:
    Path(path).write_text(dumps_canonical(bundle.to_json_dict()), encoding="utf-8")


def load_bundle(path: str | Path) -> ModelBundle:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such bundle: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"corrupt bundle {path}: {exc}") from exc
    return bundle_from_json_dict(data)
