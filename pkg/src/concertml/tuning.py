"""Grid and random hyperparameter search with a seeded, reproducible protocol.

An ``evaluate`` callback receives (params, trial_seed) and returns either a
bare score or (score, diagnostics). Scores are minimized for RMSPE-style
objectives and maximized for accuracy-style ones via ``direction``.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

GRID_LAWS = ("uniform", "log-uniform", "integer-uniform")


@dataclass(frozen=True)
class GridDim:
    """A finite list of values; enumerable by grid search."""

    values: tuple

    def __post_init__(self) -> None:
        if len(self.values) == 0:
            raise ValueError("GridDim needs at least one value")


@dataclass(frozen=True)
class RangeDim:
    """A bounded range sampled by one of the supported laws."""

    low: float
    high: float
    law: str = "uniform"

    def __post_init__(self) -> None:
        if not self.low < self.high:
            raise ValueError("RangeDim requires low < high")
        if self.law not in GRID_LAWS:
            raise ValueError(f"unknown sampling law {self.law!r}")
        if self.law == "log-uniform" and self.low <= 0:
            raise ValueError("log-uniform needs a positive lower bound")

    def sample(self, rng: np.random.Generator):
        if self.law == "uniform":
            return float(rng.uniform(self.low, self.high))
        if self.law == "log-uniform":
            return float(np.exp(rng.uniform(np.log(self.low), np.log(self.high))))
        return int(rng.integers(int(self.low), int(self.high) + 1))  # inclusive ends


@dataclass(frozen=True)
class ParamSpace:
    dimensions: Mapping[str, GridDim | RangeDim]

    def __post_init__(self) -> None:
        if not self.dimensions:
            raise ValueError("empty parameter space")


@dataclass(frozen=True)
class TrialResult:
    params: dict
    score: float
    diagnostics: dict = field(default_factory=dict)
    seed: int = 0


Evaluate = Callable[[dict, int], "float | tuple[float, dict]"]


def _run_trial(evaluate: Evaluate, params: dict, seed: int) -> TrialResult:
    started = time.perf_counter()
    outcome = evaluate(params, seed)
    duration = time.perf_counter() - started
    if isinstance(outcome, tuple):
        score, diagnostics = outcome
    else:
        score, diagnostics = outcome, {}
    score = float(score)
    if not np.isfinite(score):
        raise ValueError(f"trial produced a non-finite score for params {params}")
    diagnostics = dict(diagnostics)
    diagnostics.setdefault("duration_s", duration)
    return TrialResult(params=dict(params), score=score, diagnostics=diagnostics, seed=seed)


def _pick_best(trials: list[TrialResult], direction: str) -> TrialResult:
    if direction not in ("min", "max"):
        raise ValueError("direction must be 'min' or 'max'")
    best = trials[0]
    for t in trials[1:]:  # strict comparison keeps the earliest on ties
        if (direction == "min" and t.score < best.score) or (
            direction == "max" and t.score > best.score
        ):
            best = t
    return best


def grid_search(
    space: ParamSpace,
    evaluate: Evaluate,
    direction: str = "min",
    seed: int = 0,
) -> tuple[TrialResult, list[TrialResult]]:
    """Evaluate the full Cartesian product in lexicographic enumeration order."""
    names = list(space.dimensions)
    for name in names:
        if not isinstance(space.dimensions[name], GridDim):
            raise ValueError(f"grid_search needs finite dimensions; {name} is a range")
    value_lists = [space.dimensions[n].values for n in names]
    trials = []
    for index, combo in enumerate(product(*value_lists)):
        params = dict(zip(names, combo))
        trials.append(_run_trial(evaluate, params, seed=seed + index))
    return _pick_best(trials, direction), trials


def random_search(
    space: ParamSpace,
    n_trials: int,
    seed: int,
    evaluate: Evaluate,
    direction: str = "min",
) -> tuple[TrialResult, list[TrialResult]]:
    """n_trials independent seeded draws; fully reproducible given seed."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    trials = []
    for spawned in np.random.SeedSequence(seed).spawn(n_trials):
        rng = np.random.default_rng(spawned)
        params = {}
        for name, dim in space.dimensions.items():
            if isinstance(dim, GridDim):
                params[name] = dim.values[int(rng.integers(len(dim.values)))]
            else:
                params[name] = dim.sample(rng)
        trial_seed = int(rng.integers(2 ** 31 - 1))
        trials.append(_run_trial(evaluate, params, trial_seed))
    return _pick_best(trials, direction), trials


def trials_to_csv(trials: list[TrialResult], path: str | Path) -> None:
    """One row per trial: index, params, score, duration."""
    keys = sorted({k for t in trials for k in t.params})
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", *keys, "score", "duration_s"])
        for i, t in enumerate(trials):
            writer.writerow(
                [i, *[t.params.get(k, "") for k in keys], repr(t.score),
                 f"{t.diagnostics.get('duration_s', 0.0):.6f}"]
            )


# Shipped search presets. Values bracket the tuned configurations the
# toolkit defaults to: SGD regression (l2, alpha 0.1, degree 0), SVR
# (0.5, 0.01, 2), logistic (C 0.1, l1), SVC (10, 0.01), forest (105, 47, 10).
def sgd_regression_space() -> ParamSpace:
    return ParamSpace({
        "penalty": GridDim(("l1", "l2")),
        "alpha": GridDim((0.001, 0.01, 0.1, 1.0)),
        "degree": GridDim((0, 1, 2)),
    })


def svr_space() -> ParamSpace:
    return ParamSpace({
        "C": GridDim((0.1, 0.5, 1.0)),
        "gamma": GridDim((0.001, 0.01, 0.1)),
        "epsilon": GridDim((0.5, 1.0, 2.0)),
    })


def logistic_space() -> ParamSpace:
    return ParamSpace({
        "C": GridDim((0.01, 0.1, 1.0, 10.0)),
        "penalty": GridDim(("l1", "l2")),
        "mode": GridDim(("ovr", "multinomial")),
        "pca_components": GridDim((0, 10)),  # 0 disables projection
    })


def svc_space() -> ParamSpace:
    return ParamSpace({
        "C": GridDim((1.0, 10.0, 100.0)),
        "gamma": GridDim((0.001, 0.01, 0.1)),
    })


def forest_space() -> ParamSpace:
    return ParamSpace({
        "n_trees": RangeDim(50, 150, "integer-uniform"),
        "max_depth": RangeDim(10, 60, "integer-uniform"),
        "min_samples_leaf": RangeDim(1, 20, "integer-uniform"),
    })


SEARCH_PRESETS: dict[str, Callable[[], ParamSpace]] = {
    "sgd": sgd_regression_space,
    "svr": svr_space,
    "logistic": logistic_space,
    "svc": svc_space,
    "forest": forest_space,
}
