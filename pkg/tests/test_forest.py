import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from concertml.forest import (
    ForestParams,
    TreeNode,
    forest_fit,
    forest_predict,
    forest_predict_proba,
    gini,
    tree_fit,
    tree_leaf_counts,
    tree_predict,
)


def test_gini_pure_node():
    assert gini(np.zeros(7, dtype=int)) == 0.0


def test_gini_fifty_fifty():
    assert gini(np.array([0, 1, 0, 1])) == pytest.approx(0.5)


def test_gini_five_balanced():
    # direct evaluation: 1 - 5 * (1/5)^2 = 0.8
    assert gini(np.array([0, 1, 2, 3, 4])) == pytest.approx(0.8)


def test_gini_empty_errors():
    with pytest.raises(ValueError):
        gini(np.array([], dtype=int))


def test_tree_separable_single_split():
    x = np.array([[0.1], [0.2], [0.3], [0.7], [0.8], [0.9]])
    y = np.array([0, 0, 0, 1, 1, 1])
    tree = tree_fit(x, y, max_depth=None, min_samples_leaf=1)
    assert not tree.is_leaf
    assert tree.left.is_leaf and tree.right.is_leaf
    assert 0.3 < tree.threshold < 0.7
    assert np.array_equal(tree_predict(tree, x), y)


def test_tree_min_leaf_equals_m_single_leaf(rng):
    X = rng.normal(size=(12, 3))
    y = rng.integers(0, 5, size=12)
    tree = tree_fit(X, y, min_samples_leaf=12)
    assert tree.is_leaf
    counts = np.asarray(tree.counts)
    assert int(np.argmax(counts)) == np.bincount(y, minlength=5).argmax()


def test_tree_pure_input_single_leaf(rng):
    X = rng.normal(size=(9, 2))
    tree = tree_fit(X, np.full(9, 3), min_samples_leaf=1)
    assert tree.is_leaf
    assert tree.counts[3] == 9


def _depth(node: TreeNode) -> int:
    if node.is_leaf:
        return 0
    return 1 + max(_depth(node.left), _depth(node.right))


def _check_leaves(node: TreeNode, min_leaf: int) -> None:
    if node.is_leaf:
        assert sum(node.counts) >= min_leaf
        return
    _check_leaves(node.left, min_leaf)
    _check_leaves(node.right, min_leaf)


def _split_gains_positive(node: TreeNode, X, y) -> None:
    if node.is_leaf:
        return
    parent = gini(y)
    mask = X[:, node.feature] <= node.threshold
    nl, nr = mask.sum(), (~mask).sum()
    child = (nl / len(y)) * gini(y[mask]) + (nr / len(y)) * gini(y[~mask])
    assert parent - child > 0
    _split_gains_positive(node.left, X[mask], y[mask])
    _split_gains_positive(node.right, X[~mask], y[~mask])


def test_tree_depth_leafsize_and_gain_invariants(rng):
    X = rng.normal(size=(100, 4))
    y = (X[:, 0] + 0.4 * rng.normal(size=100) > 0).astype(int)
    for max_depth, min_leaf in ((2, 5), (4, 3), (None, 8)):
        tree = tree_fit(X, y, max_depth=max_depth, min_samples_leaf=min_leaf, seed=1)
        if max_depth is not None:
            assert _depth(tree) <= max_depth
        _check_leaves(tree, min_leaf)
        _split_gains_positive(tree, X, y)


def test_forest_memorizes_distinct_rows(rng):
    X = rng.normal(size=(30, 5))
    y = rng.integers(0, 5, size=30)
    params = ForestParams(n_trees=1, max_depth=None, min_samples_leaf=1,
                          feature_subset_size=5, bootstrap=False, seed=0)
    model = forest_fit(X, y, params)
    assert np.array_equal(model.predict(X), y)


def test_forest_paper_defaults_echoed():
    params = ForestParams()
    assert (params.n_trees, params.max_depth, params.min_samples_leaf) == (105, 47, 10)


def test_forest_clone_trees_equal_single_tree(rng):
    X = rng.normal(size=(40, 4))
    y = rng.integers(0, 3, size=40)
    params = ForestParams(n_trees=7, max_depth=4, min_samples_leaf=2,
                          feature_subset_size=4, bootstrap=False, seed=0)
    forest = forest_fit(X, y, params)
    single = tree_fit(X, y, max_depth=4, min_samples_leaf=2,
                      feature_subset_size=4, seed=0)
    assert np.array_equal(forest_predict(forest, X), tree_predict(single, X))


def test_forest_determinism(rng):
    X = rng.normal(size=(60, 6))
    y = rng.integers(0, 5, size=60)
    params = ForestParams(n_trees=10, max_depth=6, min_samples_leaf=3, seed=77)
    f1 = forest_fit(X, y, params)
    f2 = forest_fit(X, y, params)
    probe = rng.normal(size=(20, 6))
    assert np.array_equal(forest_predict_proba(f1, probe),
                          forest_predict_proba(f2, probe))
    assert f1.trees == f2.trees


@given(st.integers(min_value=0, max_value=5000))
def test_forest_proba_rows_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(25, 3))
    y = rng.integers(0, 5, size=25)
    model = forest_fit(X, y, ForestParams(n_trees=5, max_depth=4,
                                          min_samples_leaf=2, seed=seed))
    probs = forest_predict_proba(model, X)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(probs >= 0)


def test_forest_zero_trees_rejected():
    with pytest.raises(ValueError):
        ForestParams(n_trees=0)


def test_tree_tie_breaks_lowest_feature():
    # duplicate feature columns: identical gains, expect the lower index
    x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 0, 1])
    tree = tree_fit(x, y, min_samples_leaf=1, feature_subset_size=2, seed=0)
    assert tree.feature == 0


def test_tree_leaf_counts_batch_matches_scalar(rng):
    X = rng.normal(size=(50, 4))
    y = rng.integers(0, 5, size=50)
    tree = tree_fit(X, y, max_depth=5, min_samples_leaf=2, seed=3)
    batch = tree_leaf_counts(tree, X)

    def walk(x):
        node = tree
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.counts

    for i in range(50):
        assert tuple(batch[i]) == tuple(float(c) for c in walk(X[i]))
