import numpy as np
import pytest

from concertml.tuning import (
    GridDim,
    ParamSpace,
    RangeDim,
    grid_search,
    random_search,
    trials_to_csv,
)


def test_grid_product_size():
    space = ParamSpace({"a": GridDim((1, 2)), "b": GridDim(("x", "y"))})
    best, trials = grid_search(space, lambda p, s: float(p["a"]))
    assert len(trials) == 4
    assert {(t.params["a"], t.params["b"]) for t in trials} == {
        (1, "x"), (1, "y"), (2, "x"), (2, "y")
    }


def test_grid_single_point():
    space = ParamSpace({"a": GridDim((7,))})
    best, trials = grid_search(space, lambda p, s: 3.0)
    assert best.params == {"a": 7}
    assert len(trials) == 1


def test_grid_matches_enumeration_oracle():
    # convex score over a 1..10 grid; oracle = direct enumeration
    space = ParamSpace({"a": GridDim(tuple(range(1, 11)))})
    score = lambda p, s: (p["a"] - 6.3) ** 2  # noqa: E731
    best, trials = grid_search(space, score)
    oracle_best = min(range(1, 11), key=lambda a: (a - 6.3) ** 2)
    assert best.params["a"] == oracle_best


def test_grid_tie_breaks_first_in_order():
    space = ParamSpace({"a": GridDim((1, 2, 3))})
    best, _ = grid_search(space, lambda p, s: 0.0)
    assert best.params["a"] == 1


def test_grid_rejects_ranges():
    space = ParamSpace({"a": RangeDim(0.0, 1.0)})
    with pytest.raises(ValueError, match="finite"):
        grid_search(space, lambda p, s: 0.0)


def test_grid_maximize_direction():
    space = ParamSpace({"a": GridDim((1, 2, 3))})
    best, _ = grid_search(space, lambda p, s: float(p["a"]), direction="max")
    assert best.params["a"] == 3


def test_random_search_deterministic():
    space = ParamSpace({
        "a": RangeDim(0.0, 1.0, "uniform"),
        "b": GridDim(("p", "q")),
        "c": RangeDim(1, 10, "integer-uniform"),
    })
    fn = lambda p, s: p["a"]  # noqa: E731
    best1, trials1 = random_search(space, 20, seed=5, evaluate=fn)
    best2, trials2 = random_search(space, 20, seed=5, evaluate=fn)
    assert [t.params for t in trials1] == [t.params for t in trials2]
    assert [t.seed for t in trials1] == [t.seed for t in trials2]
    assert best1.params == best2.params


def test_random_search_single_trial():
    space = ParamSpace({"a": GridDim((4,))})
    best, trials = random_search(space, 1, seed=0, evaluate=lambda p, s: 9.0)
    assert len(trials) == 1 and best.score == 9.0


def test_random_search_bounds_respected():
    space = ParamSpace({
        "u": RangeDim(-2.0, 3.0, "uniform"),
        "l": RangeDim(1e-3, 1e1, "log-uniform"),
        "i": RangeDim(2, 9, "integer-uniform"),
    })
    _, trials = random_search(space, 200, seed=1, evaluate=lambda p, s: 0.0)
    for t in trials:
        assert -2.0 <= t.params["u"] <= 3.0
        assert 1e-3 <= t.params["l"] <= 1e1
        assert 2 <= t.params["i"] <= 9 and isinstance(t.params["i"], int)


def test_log_uniform_decades_uniform_within_3_sigma():
    # statistical oracle: each decade of [1e-3, 1e1] should hold ~n/4 draws
    space = ParamSpace({"l": RangeDim(1e-3, 1e1, "log-uniform")})
    n = 10_000
    _, trials = random_search(space, n, seed=17, evaluate=lambda p, s: 0.0)
    draws = np.array([t.params["l"] for t in trials])
    edges = [1e-3, 1e-2, 1e-1, 1e0, 1e1]
    expected = n / 4
    sigma = np.sqrt(n * 0.25 * 0.75)
    for lo, hi in zip(edges[:-1], edges[1:]):
        count = int(np.sum((draws >= lo) & (draws < hi)))
        assert abs(count - expected) <= 3 * sigma


def test_best_dominates_all_trials():
    space = ParamSpace({"a": RangeDim(0.0, 1.0)})
    best, trials = random_search(space, 40, seed=3, evaluate=lambda p, s: p["a"])
    assert all(best.score <= t.score for t in trials)
    best_max, trials_max = random_search(space, 40, seed=3,
                                         evaluate=lambda p, s: p["a"],
                                         direction="max")
    assert all(best_max.score >= t.score for t in trials_max)


def test_non_finite_score_rejected():
    space = ParamSpace({"a": GridDim((1,))})
    with pytest.raises(ValueError, match="non-finite"):
        grid_search(space, lambda p, s: float("nan"))


def test_diagnostics_tuple_return():
    space = ParamSpace({"a": GridDim((1, 2))})
    best, trials = grid_search(space, lambda p, s: (float(p["a"]), {"note": p["a"]}))
    assert trials[0].diagnostics["note"] == 1
    assert "duration_s" in trials[0].diagnostics


def test_trials_csv(tmp_path):
    space = ParamSpace({"alpha": GridDim((0.1, 1.0)), "deg": GridDim((0, 1))})
    _, trials = grid_search(space, lambda p, s: p["alpha"] + p["deg"])
    path = tmp_path / "trials.csv"
    trials_to_csv(trials, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "trial,alpha,deg,score,duration_s"
    assert len(lines) == 5


def test_empty_space_rejected():
    with pytest.raises(ValueError):
        ParamSpace({})


def test_range_dim_validation():
    with pytest.raises(ValueError):
        RangeDim(2.0, 1.0)
    with pytest.raises(ValueError):
        RangeDim(0.0, 1.0, "log-uniform")
    with pytest.raises(ValueError):
        RangeDim(0.0, 1.0, "unknown-law")
