"""Command-line workflows over the concert pipeline.

Subcommands: ingest, cluster-cities, train, tune, evaluate, benchmark,
predict, serve. Every command writes documented files into --out-dir, exits 0
on success, and on failure prints one machine-parsable line
``error: <kind>: <message>`` to stderr and exits nonzero. All emitted JSON is
canonical (sorted keys), so identical seeds and inputs reproduce identical
bytes; the tune trial log's wall-clock duration column is the one documented
exception.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from . import service as service_mod
from .bundle import dumps_canonical, load_bundle, save_bundle
from .city_cluster import kmeans_fit, load_city_csv
from .data_model import (
    CLASS_COLUMN,
    PRICE_COLUMN,
    impute_all,
    load_csv,
    write_csv,
)
from .evaluation import accuracy, benchmark_to_text, confusion
from .linear_models import rmspe
from .mlp import history_to_csv
from .pipeline import (
    LOCATION_FAMILIES,
    PRICE_FAMILIES,
    PipelineSettings,
    benchmark_task,
    bundle_predict_location,
    bundle_predict_price,
    bundle_transform,
    make_bundle,
    train_task,
    tune_task,
)
from .tuning import GridDim, ParamSpace, RangeDim, trials_to_csv

PORT_ENV_VAR = "CONCERTML_PORT"


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(dumps_canonical(payload), encoding="utf-8")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _model_params_from_config(config: dict, family: str) -> dict:
    params = dict(config.get("models", {}).get(family, {}))
    if "hidden_sizes" in params:
        params["hidden_sizes"] = tuple(params["hidden_sizes"])
    if "dropout" in params and isinstance(params["dropout"], list):
        params["dropout"] = tuple(params["dropout"])
    if "max_depth" in params and params["max_depth"] in (0, -1):
        params["max_depth"] = None
    return params


def _space_from_config(config: dict, family: str) -> ParamSpace | None:
    raw = config.get("search", {}).get(family)
    if raw is None:
        return None
    dims = {}
    for name, value in raw.items():
        if name in ("method", "trials"):
            continue
        if isinstance(value, list):
            dims[name] = GridDim(tuple(value))
        elif isinstance(value, dict):
            dims[name] = RangeDim(value["low"], value["high"],
                                  value.get("law", "uniform"))
        else:
            dims[name] = GridDim((value,))
    return ParamSpace(dims) if dims else None


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_ingest(args) -> int:
    table = load_csv(args.input)
    cleaned, fill_counts = impute_all(table)
    write_csv(cleaned, args.output)
    report = {
        "rows": cleaned.n_rows,
        "columns": len(cleaned.columns),
        "imputed_cells": {k: v for k, v in sorted(fill_counts.items())},
        "input_fingerprint": _sha256_file(Path(args.input)),
    }
    if args.report:
        _write_json(Path(args.report), report)
    print(f"ingested {cleaned.n_rows} rows -> {args.output}")
    return 0


def cmd_cluster_cities(args) -> int:
    cities = load_city_csv(args.cities)
    model = kmeans_fit(cities, k=args.k, seed=args.seed, n_restarts=args.restarts)
    payload = {
        "k": model.k,
        "centroids_standardized": model.centroids.tolist(),
        "centroids_original_units": model.centroids_original_units().tolist(),
        "feature_means": model.feature_means.tolist(),
        "feature_stds": model.feature_stds.tolist(),
        "inertia": model.inertia,
        "seed": model.seed,
        "n_restarts": model.n_restarts,
        "inertia_history": list(model.inertia_history),
        "fit_labels": list(model.fit_labels),
    }
    _write_json(Path(args.output), payload)
    if args.assignments:
        lines = ["city,class"]
        lines += [f"{c.name},{label}" for c, label in zip(cities, model.fit_labels)]
        Path(args.assignments).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"clustered {len(cities)} cities into {model.k} classes "
          f"(inertia {model.inertia:.4f}) -> {args.output}")
    return 0


def _load_city_model(path: str | None):
    if path is None:
        return None
    import json

    from .city_cluster import KMeansModel

    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return KMeansModel(
        k=int(data["k"]),
        centroids=np.array(data["centroids_standardized"]),
        feature_means=np.array(data["feature_means"]),
        feature_stds=np.array(data["feature_stds"]),
        inertia=float(data["inertia"]),
        seed=int(data["seed"]),
        n_restarts=int(data["n_restarts"]),
        inertia_history=tuple(data["inertia_history"]),
        fit_labels=tuple(data["fit_labels"]),
    )


def cmd_train(args) -> int:
    config = _load_config(args.config)
    train_cfg = config.get("train", {})
    seed = args.seed if args.seed is not None else int(train_cfg.get("seed", 0))
    test_fraction = (
        args.test_fraction if args.test_fraction is not None
        else float(train_cfg.get("test_fraction", 0.2))
    )
    settings = PipelineSettings(
        task=args.task,
        family=args.model,
        seed=seed,
        test_fraction=test_fraction,
        oversample_training=bool(train_cfg.get("oversample", True)),
        model_params=_model_params_from_config(config, args.model),
    )
    table = load_csv(args.data)
    outcome = train_task(table, settings)
    bundle = make_bundle(outcome, data_fingerprint=_sha256_file(Path(args.data)),
                         kmeans=_load_city_model(args.city_model))
    out = _out_dir(args)
    save_bundle(bundle, out / "bundle.json")
    _write_json(out / "train_report.json", {
        "task": args.task,
        "family": args.model,
        "seed": seed,
        "scores": bundle.metadata["scores"],
        "hyperparameters": bundle.metadata["hyperparameters"],
        "data_fingerprint": bundle.metadata["data_fingerprint"],
        "split_fingerprint": bundle.metadata["split_fingerprint"],
        "n_train": bundle.metadata["n_train"],
        "n_test": bundle.metadata["n_test"],
        "oversample": bundle.metadata["oversample"],
    })
    if args.task == "location":
        prep = outcome.prepared
        from .pipeline import predict_family

        cm = confusion(prep.y_test, predict_family(args.model, outcome.model, prep.x_test))
        (out / f"confusion_{args.model}.csv").write_text(cm.plain_csv(), encoding="utf-8")
        (out / f"confusion_{args.model}_normalized.csv").write_text(
            cm.normalized_csv(), encoding="utf-8")
    if args.model == "mlp":
        (out / "mlp_history.csv").write_text(history_to_csv(outcome.model),
                                             encoding="utf-8")
    for name, value in sorted(bundle.metadata["scores"].items()):
        print(f"{name}: {value:.6f}")
    print(f"bundle -> {out / 'bundle.json'}")
    return 0


def cmd_tune(args) -> int:
    config = _load_config(args.config)
    search_cfg = config.get("search", {}).get(args.model, {})
    method = args.method or search_cfg.get("method", "random")
    trials = args.trials if args.trials is not None else int(search_cfg.get("trials", 50))
    outcome = tune_task(
        load_csv(args.data),
        task=args.task,
        family=args.model,
        method=method,
        n_trials=trials,
        seed=args.seed or 0,
        space=_space_from_config(config, args.model),
    )
    out = _out_dir(args)
    trials_to_csv(outcome.trials, out / "trials.csv")
    _write_json(out / "tune_report.json", {
        "task": args.task,
        "family": args.model,
        "method": method,
        "n_trials": len(outcome.trials),
        "best_params": outcome.best.params,
        "best_score": outcome.best.score,
        "refit_scores": {k: float(v) for k, v in sorted(outcome.refit.scores.items())},
        "all_scores": [t.score for t in outcome.trials],
    })
    bundle = make_bundle(outcome.refit, data_fingerprint=_sha256_file(Path(args.data)))
    save_bundle(bundle, out / "tuned_bundle.json")
    print(f"best params: {outcome.best.params} (score {outcome.best.score:.6f})")
    print(f"tuned bundle -> {out / 'tuned_bundle.json'}")
    return 0


def cmd_evaluate(args) -> int:
    bundle = load_bundle(args.bundle)
    table = load_csv(args.data)
    X = bundle_transform(bundle, table)
    out = _out_dir(args)
    report: dict = {"task": bundle.task, "rows": X.n_rows}
    if bundle.task == "location":
        result = bundle_predict_location(bundle, X)
        labels = [v for v in table.column_values(CLASS_COLUMN)]
        y = np.array([int(float(v)) for v in labels])
        report["accuracy"] = accuracy(y, result["classes"])
        cm = confusion(y, result["classes"])
        (out / "confusion_eval.csv").write_text(cm.plain_csv(), encoding="utf-8")
        (out / "confusion_eval_normalized.csv").write_text(cm.normalized_csv(),
                                                           encoding="utf-8")
    else:
        result = bundle_predict_price(bundle, X)
        prices = np.array([float(v) for v in table.column_values(PRICE_COLUMN)])
        report["rmspe_price_scale"] = rmspe(prices, result["price"])
        if bundle.metadata.get("log_price_target", True):
            report["rmspe"] = rmspe(np.log(prices), result["model_scale"])
        else:
            report["rmspe"] = report["rmspe_price_scale"]
    _write_json(out / "metrics_report.json", report)
    for key in sorted(k for k in report if k not in ("task", "rows")):
        print(f"{key}: {report[key]:.6f}")
    return 0


def cmd_benchmark(args) -> int:
    table = load_csv(args.data)
    families = tuple(args.families.split(",")) if args.families else None
    config = _load_config(args.config)
    model_params = {
        fam: _model_params_from_config(config, fam)
        for fam in (families or (PRICE_FAMILIES if args.task == "price"
                                 else LOCATION_FAMILIES))
    }
    upper_overrides = dict(config.get("benchmark", {}).get("upper_bound", {}))
    report, artifacts = benchmark_task(
        table, args.task, seed=args.seed or 0, families=families,
        model_params=model_params, upper_bound_overrides=upper_overrides,
    )
    out = _out_dir(args)
    _write_json(out / "benchmark_report.json", report.to_json_dict())
    (out / "benchmark_report.txt").write_text(benchmark_to_text(report),
                                              encoding="utf-8")
    for name, artifact in sorted(artifacts.items()):
        if name.startswith("confusion_"):
            (out / f"{name}.csv").write_text(artifact.plain_csv(), encoding="utf-8")
            (out / f"{name}_normalized.csv").write_text(artifact.normalized_csv(),
                                                        encoding="utf-8")
        elif name == "mlp_model":
            (out / "mlp_history.csv").write_text(history_to_csv(artifact),
                                                 encoding="utf-8")
    print(benchmark_to_text(report), end="")
    return 0


def cmd_predict(args) -> int:
    bundle = load_bundle(args.bundle)
    if args.task and args.task != bundle.task:
        raise ValueError(
            f"bundle was trained for task {bundle.task!r}, not {args.task!r}"
        )
    table = load_csv(args.input)
    X = bundle_transform(bundle, table)
    if bundle.task == "location":
        result = bundle_predict_location(bundle, X)
        payload = [
            {
                "probabilities": [float(p) for p in result["probabilities"][i]],
                "class": int(result["classes"][i]),
            }
            for i in range(X.n_rows)
        ]
    else:
        result = bundle_predict_price(bundle, X)
        payload = [
            {
                "price": float(result["price"][i]),
                "model_scale": float(result["model_scale"][i]),
                "train_rmspe": bundle.metadata.get("scores", {}).get("train_rmspe"),
            }
            for i in range(X.n_rows)
        ]
    text = dumps_canonical(payload)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_serve(args) -> int:
    bundle = load_bundle(args.bundle)
    extra = load_bundle(args.extra_bundle) if args.extra_bundle else None
    port = args.port
    if port is None:
        port = int(os.environ.get(PORT_ENV_VAR, "8787"))
    try:
        server = service_mod.make_server(bundle, host=args.host, port=port,
                                         ui_dir=args.ui_dir, extra_bundle=extra)
    except OSError as exc:
        raise OSError(f"cannot bind {args.host}:{port}: {exc}") from exc
    host, bound_port = server.server_address[:2]
    print(f"serving {bundle.task} bundle on http://{host}:{bound_port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="concertml",
        description="Concert price regression and city-class location toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a CSV snapshot and impute missing cells")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("cluster-cities", help="fit the 5-class k-means city model")
    p.add_argument("--cities", required=True, help="CSV: city,income_per_capita,population_density")
    p.add_argument("--output", required=True)
    p.add_argument("--assignments", default=None)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10)
    p.set_defaults(func=cmd_cluster_cities)

    p = sub.add_parser("train", help="fit one model family and write a bundle")
    p.add_argument("--task", required=True, choices=("price", "location"))
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--city-model", default=None)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tune", help="hyperparameter search, then refit the best")
    p.add_argument("--task", required=True, choices=("price", "location"))
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--method", choices=("grid", "random"), default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("evaluate", help="score a bundle against a labeled CSV")
    p.add_argument("--bundle", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="bounded score table for every family")
    p.add_argument("--task", required=True, choices=("price", "location"))
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--families", default=None, help="comma-separated family subset")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("predict", help="predict rows from a schema CSV")
    p.add_argument("--bundle", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--task", default=None, choices=("price", "location"))
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="run the HTTP inference service")
    p.add_argument("--bundle", required=True)
    p.add_argument("--extra-bundle", default=None,
                   help="bundle for the other task, so one service answers both predict endpoints")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None,
                   help=f"defaults to ${PORT_ENV_VAR} or 8787")
    p.add_argument("--ui-dir", default=None, help="also serve this static directory")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
