import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from concertml.data_model import CONTINUOUS, FeatureMatrix, SchemaError, as_matrix
from concertml.preprocess import (
    LogSpec,
    apply_minmax,
    fit_minmax,
    fit_pca,
    invert_minmax,
    log_transform,
    oversample,
    pca_project,
)
from oracles import pca_eigh_oracle


def _fm(values, names=None):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    if names is None:
        names = tuple(f"c{j}" for j in range(values.shape[1]))
    return FeatureMatrix(values, tuple(names), (CONTINUOUS,) * values.shape[1])


def test_log_transform_values():
    fm = _fm([[2.0], [1.0], [math.e]], names=("genres_num",))
    out = log_transform(fm, LogSpec(("genres_num",)))
    assert out.values[0, 0] == pytest.approx(0.693, abs=5e-4)  # ln 2, Table-4 style
    assert out.values[1, 0] == 0.0
    assert out.values[2, 0] == pytest.approx(1.0, abs=1e-12)


def test_log_transform_offset_and_untouched_columns():
    fm = _fm([[0.0, 7.0]], names=("a", "b"))
    out = log_transform(fm, LogSpec(("a",), {"a": 1.0}))
    assert out.values[0, 0] == 0.0  # ln(0+1)
    assert out.values[0, 1] == 7.0


def test_log_transform_nonpositive_names_row_and_column():
    fm = _fm([[1.0], [-2.0]], names=("a",))
    with pytest.raises(ValueError, match=r"row 1.*column a"):
        log_transform(fm, LogSpec(("a",)))


def test_log_transform_skips_absent_columns():
    fm = _fm([[5.0]], names=("other",))
    out = log_transform(fm, LogSpec(("average_price",)))
    assert out.values[0, 0] == 5.0


def test_minmax_basic():
    fm = _fm([0.0, 5.0, 10.0])
    state = fit_minmax(fm)
    out = apply_minmax(fm, state)
    assert out.values.ravel().tolist() == [0.0, 0.5, 1.0]


def test_minmax_constant_column_maps_to_zero():
    fm = _fm([7.0, 7.0, 7.0])
    out = apply_minmax(fm, fit_minmax(fm))
    assert out.values.ravel().tolist() == [0.0, 0.0, 0.0]


def test_minmax_no_clamping():
    fm = _fm([0.0, 10.0])
    state = fit_minmax(fm)
    out = apply_minmax(_fm([12.0]), state)
    assert out.values[0, 0] == pytest.approx(1.2)


def test_minmax_unknown_columns_error():
    state = fit_minmax(_fm([[1.0]], names=("a",)))
    with pytest.raises(SchemaError, match="b"):
        apply_minmax(_fm([[1.0]], names=("b",)), state)


@given(
    st.lists(
        st.lists(st.floats(min_value=-1e6, max_value=1e6,
                           allow_nan=False, allow_infinity=False),
                 min_size=2, max_size=4),
        min_size=2, max_size=20,
    ).filter(lambda rows: len({len(r) for r in rows}) == 1)
)
def test_minmax_fit_data_in_unit_box_and_roundtrip(rows):
    fm = _fm(np.array(rows))
    state = fit_minmax(fm)
    scaled = apply_minmax(fm, state)
    assert np.all(scaled.values >= -1e-12) and np.all(scaled.values <= 1 + 1e-12)
    back = invert_minmax(scaled, state)
    span = state.maxs - state.mins
    non_constant = span > 0
    if non_constant.any():
        scale = 1 + np.abs(fm.values[:, non_constant]).max()
        assert np.allclose(back.values[:, non_constant], fm.values[:, non_constant],
                           atol=1e-10 * scale)


def test_pca_matches_eigh_oracle(rng):
    X = rng.normal(size=(6, 4))
    fm = _fm(X)
    state = fit_pca(fm, 4)
    comps_oracle, vars_oracle, _ = pca_eigh_oracle(X, 4)
    for row_impl, row_orc in zip(state.components, comps_oracle):
        agree = np.allclose(row_impl, row_orc, atol=1e-6)
        flipped = np.allclose(row_impl, -row_orc, atol=1e-6)
        assert agree or flipped
    assert np.allclose(state.explained_variance, vars_oracle, atol=1e-8)


def test_pca_full_rank_preserves_distances(rng):
    X = rng.normal(size=(12, 5))
    fm = _fm(X)
    proj = pca_project(fm, fit_pca(fm, 5))
    d_before = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)
    P = proj.values
    d_after = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
    assert np.allclose(d_before, d_after, atol=1e-8)


def test_pca_rank_one_line():
    t = np.linspace(-3, 3, 40)
    X = np.column_stack([t, t]) + 1e-9
    state = fit_pca(_fm(X), 2)
    total = state.explained_variance.sum()
    assert state.explained_variance[0] / total >= 0.99999


def test_pca_orthonormal_and_variance_sum(rng):
    X = rng.normal(size=(30, 6))
    fm = _fm(X)
    state = fit_pca(fm, 6)
    gram = state.components @ state.components.T
    assert np.allclose(gram, np.eye(6), atol=1e-8)
    assert np.all(np.diff(state.explained_variance) <= 1e-12)
    total_var = X.var(axis=0, ddof=1).sum()
    assert state.explained_variance.sum() == pytest.approx(total_var, abs=1e-8)
    # sign convention: first nonzero entry of each component positive
    for row in state.components:
        nz = row[np.abs(row) > 1e-12]
        assert nz[0] > 0


def test_pca_k_bounds(rng):
    fm = _fm(rng.normal(size=(5, 3)))
    with pytest.raises(ValueError):
        fit_pca(fm, 4)
    with pytest.raises(ValueError):
        fit_pca(fm, 0)


def test_oversample_counts_4_2():
    X = _fm(np.arange(6, dtype=float))
    y = np.array([0, 0, 0, 0, 1, 1])
    X2, y2, report = oversample(X, y, seed=0)
    assert report.original_counts == {0: 4, 1: 2}
    assert report.final_counts == {0: 4, 1: 4}
    assert len(report.duplicated_indices) == 2
    assert all(y[i] == 1 for i in report.duplicated_indices)


def test_oversample_balanced_identity():
    X = _fm(np.arange(15, dtype=float))
    y = np.repeat(np.arange(5), 3)
    X2, y2, report = oversample(X, y, seed=3)
    assert report.duplicated_indices == ()
    assert X2.n_rows == 15


def test_oversample_total_50():
    y = np.concatenate([np.zeros(10), np.ones(5), np.full(3, 2), [3], [4]]).astype(int)
    X = _fm(np.arange(len(y), dtype=float))
    X2, y2, report = oversample(X, y, seed=1)
    assert len(y2) == 50
    assert all(v == 10 for v in report.final_counts.values())


@given(st.lists(st.integers(min_value=0, max_value=4), min_size=1, max_size=60),
       st.integers(min_value=0, max_value=100))
def test_oversample_uniform_and_rows_from_input(labels, seed):
    y = np.array(labels)
    X = _fm(np.arange(len(y), dtype=float) * 2.0)
    X2, y2, report = oversample(X, y, seed=seed)
    counts = {int(c): int(np.sum(y2 == c)) for c in np.unique(y)}
    assert len(set(counts.values())) == 1
    input_rows = set(X.values.ravel().tolist())
    assert set(X2.values.ravel().tolist()) <= input_rows
    # originals retained, in order
    assert np.array_equal(X2.values[: X.n_rows], X.values)


def test_oversample_empty_errors():
    X = FeatureMatrix(np.empty((0, 1)), ("a",), (CONTINUOUS,))
    with pytest.raises(ValueError):
        oversample(X, np.array([], dtype=int), seed=0)


def test_as_matrix_wraps_bare_arrays():
    fm = as_matrix(np.ones((3, 2)))
    assert fm.column_names == ("x0", "x1")
