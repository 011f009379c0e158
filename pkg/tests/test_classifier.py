import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from dmdfault.classifier import (
    TrainedTree,
    TreeNode,
    class_reweight,
    cross_validate,
    feature_importances,
    gini,
    tree_fit,
    tree_predict,
)
from dmdfault.errors import ParameterError, ShapeError, SingleClassError
from oracles import best_stump, gini_gain

XOR_X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)
XOR_Y = np.array([0, 1, 1, 0])


def test_gini_values():
    assert gini([4, 0]) == 0.0
    assert gini([2, 2]) == 0.5
    assert gini([1, 3]) == pytest.approx(0.375)
    with pytest.raises(ParameterError):
        gini([0, 0])


def test_all_zero_labels_single_leaf():
    tree = tree_fit(np.arange(10.0)[:, None], np.zeros(10))
    assert tree.root.is_leaf and tree.root.prediction == 0
    assert not tree.importances.any()
    assert tree_predict(tree, [123.0]) == 0


def test_separable_one_feature():
    x = np.array([1, 2, 3, 4, 5, 7, 8, 9], dtype=float)
    y = (x > 5).astype(int)
    tree = tree_fit(x[:, None], y, max_depth=5)
    assert tree.depth == 1
    assert 5 < tree.root.threshold < 7
    assert np.all(tree.predict(x[:, None]) == y)
    np.testing.assert_array_equal(tree.importances, [1.0])


def test_xor_needs_depth_two():
    w = np.ones(4)
    stump_gain, _, _ = best_stump(XOR_X, XOR_Y, w)
    assert stump_gain == pytest.approx(0.0, abs=1e-15)
    # every depth-1 rule, in either orientation, gets exactly half right
    for j, thr in itertools.product(range(2), [0.5]):
        for flip in (0, 1):
            pred = (XOR_X[:, j] > thr).astype(int) ^ flip
            assert np.mean(pred == XOR_Y) == 0.5
    d1 = tree_fit(XOR_X, XOR_Y, max_depth=1)
    assert np.mean(d1.predict(XOR_X) == XOR_Y) == 0.5
    d2 = tree_fit(XOR_X, XOR_Y, max_depth=2)
    assert np.mean(d2.predict(XOR_X) == XOR_Y) == 1.0
    assert d2.depth == 2


def test_fit_errors():
    with pytest.raises(ShapeError):
        tree_fit(np.zeros((3, 2)), np.zeros(4))
    with pytest.raises(ShapeError):
        tree_fit(np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(ParameterError):
        tree_fit(np.zeros((3, 1)), [0, 1, 2])
    with pytest.raises(ParameterError):
        tree_fit(np.zeros((3, 1)), [0, 1, 0], max_depth=0)
    with pytest.raises(ShapeError):
        tree_fit(np.zeros((3, 1)), [0, 1, 0], weights=[1, 1])


def test_predict_examples():
    leaf = TrainedTree(TreeNode((1.0, 3.0)), 2, 1)
    assert tree_predict(leaf, [0, 0]) == 1 and tree_predict(leaf, [-9, 9]) == 1
    root = TreeNode((2.0, 2.0), 0, feature=0, threshold=5.0, gain=1.0,
                    left=TreeNode((2.0, 0.0), 1), right=TreeNode((0.0, 2.0), 1))
    stump = TrainedTree(root, 1, 1)
    assert tree_predict(stump, [4.0]) == 0
    assert tree_predict(stump, [5.0]) == 0
    assert tree_predict(stump, [6.0]) == 1
    with pytest.raises(ShapeError):
        tree_predict(stump, [1.0, 2.0])
    with pytest.raises(ShapeError):
        stump.predict(np.zeros((3, 2)))


def test_leaf_tie_predicts_no_fault():
    assert TreeNode((2.0, 2.0)).prediction == 0


def test_memorizes_conflict_free_data():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 3))
    y = rng.integers(0, 2, 200)
    tree = tree_fit(X, y, max_depth=64)
    assert np.all(tree.predict(X) == y)
    assert tree.depth <= 64


def test_importances_sum_to_one():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(300, 4))
    y = (X[:, 1] + 0.3 * X[:, 2] > 0).astype(int)
    tree = tree_fit(X, y, max_depth=4)
    imp = feature_importances(tree)
    assert np.all(imp >= 0)
    assert imp.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.argmax(imp) == 1


def test_class_reweight_values():
    np.testing.assert_array_equal(class_reweight([0, 1, 0, 1]), np.ones(4))
    y = np.array([0] * 90 + [1] * 10)
    w = class_reweight(y)
    assert w[0] == pytest.approx(100 / 180) and w[-1] == pytest.approx(5.0)
    assert w[y == 0].sum() == pytest.approx(w[y == 1].sum())
    with pytest.raises(SingleClassError):
        class_reweight([1, 1, 1])


def test_cross_validate_separable():
    x = np.r_[np.linspace(0, 4, 50), np.linspace(6, 10, 50)]
    y = (x > 5).astype(int)
    depth, acc = cross_validate(x[:, None], y, None, range(1, 6), k=5, seed=0)
    assert depth == 1 and acc == 1.0
    assert cross_validate(x[:, None], y, None, range(1, 6), k=5, seed=0) == (depth, acc)


def test_cross_validate_xor_picks_two():
    X = np.tile(XOR_X, (10, 1))
    y = np.tile(XOR_Y, 10)
    depth, acc = cross_validate(X, y, None, range(1, 5), k=5, seed=1)
    assert depth == 2 and acc == 1.0


def test_cross_validate_empty_grid():
    with pytest.raises(ParameterError):
        cross_validate(np.zeros((10, 1)), np.r_[np.zeros(5), np.ones(5)], None, [], k=2)


def _dataset(seed, n, p, levels):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, levels, size=(n, p)).astype(float)
    y = rng.integers(0, 2, n)
    w = rng.uniform(0.1, 3.0, n)
    return X, y, w


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(4, 40), p=st.integers(1, 4),
       levels=st.integers(2, 8))
def test_stump_matches_exhaustive_search(seed, n, p, levels):
    X, y, w = _dataset(seed, n, p, levels)
    assume(0 < y.sum() < n)
    gain, j, thr = best_stump(X, y, w)
    tree = tree_fit(X, y, w, max_depth=1)
    root = tree.root
    if gain <= 1e-12 * w.sum():
        assert root.is_leaf
        return
    assert not root.is_leaf
    got = gini_gain(y, w, X[:, root.feature] <= root.threshold)
    assert got == pytest.approx(gain, rel=1e-9)
    # the oracle keeps the first strict maximum, which is the same tie-break order
    gains = []
    for jj in range(p):
        vals = np.unique(X[:, jj])
        gains += [gini_gain(y, w, X[:, jj] <= (a + b) / 2) for a, b in zip(vals[:-1], vals[1:])]
    if sum(g >= gain - 1e-9 * abs(gain) for g in gains) == 1:
        assert (root.feature, root.threshold) == (j, thr)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), col=st.integers(0, 2))
def test_monotone_transform_invariance(seed, col):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(80, 3))
    y = (X[:, 0] * X[:, 1] > 0).astype(int)
    assume(0 < y.sum() < 80)
    Xt = X.copy()
    Xt[:, col] = np.exp(X[:, col]) * 3 + 1
    a = tree_fit(X, y, max_depth=4)
    b = tree_fit(Xt, y, max_depth=4)
    # midpoints move under the transform, so compare on training points only
    np.testing.assert_array_equal(a.predict(X), b.predict(Xt))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_training_accuracy_monotone_in_depth(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(120, 3))
    y = (np.sin(3 * X[:, 0]) + X[:, 1] ** 2 > 0.5).astype(int)
    assume(0 < y.sum() < 120)
    accs = [np.mean(tree_fit(X, y, max_depth=d).predict(X) == y) for d in range(1, 8)]
    assert all(b >= a for a, b in zip(accs, accs[1:]))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), depth=st.integers(1, 6))
def test_vectorized_predict_matches_scalar(seed, depth):
    X, y, w = _dataset(seed, 60, 3, 5)
    assume(0 < y.sum() < 60)
    tree = tree_fit(X, y, w, max_depth=depth)
    assert tree.depth <= depth
    probe = np.random.default_rng(seed + 1).uniform(-1, 6, size=(40, 3))
    np.testing.assert_array_equal(tree.predict(probe), [tree_predict(tree, r) for r in probe])
    # truncation to the full depth is the identity
    np.testing.assert_array_equal(tree.predict(probe, depth=depth), tree.predict(probe))
