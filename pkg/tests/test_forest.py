import json

import numpy as np
import pytest

from marlfs_effort.forest import (
    ForestParams,
    cv_mse,
    fit_forest,
    fit_tree,
    fold_indices,
    importance,
    predict_forest,
)
from oracles import brute_predict, brute_tree, trees_equal


def test_perfect_separation():
    t = fit_tree([[0.0], [1.0]], [0.0, 10.0])
    assert t.to_dict() == {"feature": 0, "threshold": 0.5, "n_samples": 2,
                           "left": {"leaf": 0.0, "n_samples": 1},
                           "right": {"leaf": 10.0, "n_samples": 1}}
    assert np.array_equal(t.predict([[0.0], [1.0]]), [0.0, 10.0])


def test_constant_target_is_single_leaf():
    rng = np.random.default_rng(0)
    t = fit_tree(rng.normal(size=(7, 3)), np.full(7, 4.25))
    assert t.n_nodes == 1
    assert t.predict_one([9.0, 9.0, 9.0]) == 4.25


def test_threshold_goes_left():
    t = fit_tree([[0.0], [1.0]], [0.0, 10.0])
    assert t.predict_one([0.5]) == 0.0
    assert t.predict_one([0.5000001]) == 10.0


def test_six_point_root_matches_enumeration():
    X = np.array([[1.0, 5.0], [2.0, 3.0], [3.0, 8.0], [4.0, 1.0], [5.0, 7.0], [6.0, 2.0]])
    y = np.array([1.0, 1.5, 2.0, 9.0, 10.0, 8.5])
    ours = fit_tree(X, y).to_dict()
    ref = brute_tree(X, y)
    assert (ours["feature"], ours["threshold"]) == (ref["feature"], ref["threshold"]) == (0, 3.5)
    assert trees_equal(ours, ref)
    stump = fit_tree(X, y, ForestParams(max_depth=1))
    for row in X:
        assert stump.predict_one(row) == pytest.approx(brute_predict(brute_tree(X, y, max_depth=1), row))


@pytest.mark.parametrize("seed", range(25))
def test_small_trees_match_oracle_at_every_node(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(1, 9), rng.integers(1, 4)
    # integer-valued data forces tied values and tied split scores
    X = rng.integers(0, 4, size=(n, m)).astype(float)
    y = rng.integers(0, 5, size=n).astype(float)
    for depth in (None, 1, 2):
        assert trees_equal(fit_tree(X, y, ForestParams(max_depth=depth)).to_dict(),
                           brute_tree(X, y, max_depth=depth))


def test_unlimited_tree_interpolates_distinct_rows():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 3))
    y = rng.normal(size=40)
    t = fit_tree(X, y)
    assert np.mean((t.predict(X) - y) ** 2) == 0.0


def test_duplicate_rows_keep_pure_leaf_prediction():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([1.0, 1.0, 7.0, 9.0])
    base = fit_tree(X, y)
    dup = fit_tree(np.vstack([X, X[[0, 0, 1]]]), np.concatenate([y, y[[0, 0, 1]]]))
    assert dup.predict_one([0.0]) == base.predict_one([0.0]) == 1.0


def test_min_samples_split_and_depth():
    X = np.arange(8, dtype=float).reshape(-1, 1)
    y = np.arange(8, dtype=float) ** 2
    assert fit_tree(X, y, ForestParams(max_depth=0)).n_nodes == 1
    assert fit_tree(X, y, ForestParams(max_depth=2)).depth() == 2
    t = fit_tree(X, y, ForestParams(min_samples_split=5))
    assert all(t.n_samples[i] >= 5 for i in range(t.n_nodes) if not t.is_leaf(i))


def test_fit_tree_errors():
    with pytest.raises(ValueError):
        fit_tree(np.empty((0, 2)), np.empty(0))
    t = fit_tree([[0.0, 1.0], [1.0, 0.0]], [0.0, 1.0])
    with pytest.raises(ValueError):
        t.predict([[1.0, 2.0, 3.0]])


def test_params_validation():
    with pytest.raises(ValueError):
        ForestParams(n_trees=0)
    with pytest.raises(ValueError):
        ForestParams(min_samples_split=1)


def test_single_tree_without_bootstrap_equals_fit_tree():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(30, 4))
    y = rng.normal(size=30)
    p = ForestParams(n_trees=1, bootstrap=False)
    f = fit_forest(X, y, p)
    assert trees_equal(f.trees[0].to_dict(), fit_tree(X, y, p).to_dict(), atol=0)


def test_constant_target_forest():
    rng = np.random.default_rng(5)
    f = fit_forest(rng.normal(size=(12, 2)), np.full(12, -3.0), ForestParams(n_trees=7))
    assert all(t.n_nodes == 1 for t in f.trees)
    assert np.all(f.predict(rng.normal(size=(5, 2))) == -3.0)
    assert np.all(importance(f) == 0.0)


def test_forest_is_deterministic_and_seed_sensitive():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(25, 3))
    y = X[:, 0] + rng.normal(size=25)
    a = json.dumps(fit_forest(X, y, ForestParams(n_trees=5, seed=11)).to_dict())
    b = json.dumps(fit_forest(X, y, ForestParams(n_trees=5, seed=11)).to_dict())
    c = json.dumps(fit_forest(X, y, ForestParams(n_trees=5, seed=12)).to_dict())
    assert a == b
    assert a != c


def test_tree_seed_is_independent_of_forest_size():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(20, 3))
    y = rng.normal(size=20)
    small = fit_forest(X, y, ForestParams(n_trees=3, seed=5))
    big = fit_forest(X, y, ForestParams(n_trees=9, seed=5))
    for a, b in zip(small.trees, big.trees):
        assert trees_equal(a.to_dict(), b.to_dict(), atol=0)


def test_forest_prediction_is_tree_mean():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(40, 3))
    y = np.sin(X[:, 0]) + X[:, 1]
    f = fit_forest(X, y, ForestParams(n_trees=13, seed=1))
    pts = rng.normal(size=(1000, 3))
    per_tree = np.array([t.predict(pts) for t in f.trees])
    assert np.array_equal(predict_forest(f, pts), per_tree.mean(axis=0))


def test_two_tree_mean():
    X = np.array([[0.0], [1.0]])
    f = fit_forest(X, [2.0, 4.0], ForestParams(n_trees=2, max_depth=0, bootstrap=False))
    assert f.predict_one([0.3]) == 3.0


def test_max_features_subsampling_is_seeded():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(30, 6))
    y = X @ rng.normal(size=6)
    p = ForestParams(n_trees=4, max_features=2, seed=3)
    assert json.dumps(fit_forest(X, y, p).to_dict()) == json.dumps(fit_forest(X, y, p).to_dict())


def test_importance_finds_planted_signal():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(80, 5))
    y = 4 * X[:, 0] + 0.05 * rng.normal(size=80)
    imp = importance(fit_forest(X, y, ForestParams(n_trees=30, seed=2)))
    assert imp.sum() == pytest.approx(1.0, abs=1e-9)
    assert imp[0] > imp[1:].max()


def test_fold_indices_partition():
    parts = fold_indices(11, 3, seed=4)
    assert [len(p) for p in parts] == [4, 4, 3]
    assert sorted(np.concatenate(parts).tolist()) == list(range(11))
    with pytest.raises(ValueError):
        fold_indices(3, 4, seed=0)
    with pytest.raises(ValueError):
        fold_indices(3, 1, seed=0)


def test_cv_mse_constant_target():
    X = np.random.default_rng(0).normal(size=(10, 2))
    assert cv_mse(X, np.full(10, 2.0), 5, ForestParams(n_trees=3)) == 0.0


def test_cv_mse_hand_oracle_with_leaf_regressor():
    X = np.zeros((4, 1))
    y = np.array([1.0, 2.0, 4.0, 8.0])
    seed = 3
    parts = fold_indices(4, 2, seed)
    expected = []
    for k in range(2):
        test = parts[k]
        train = parts[1 - k]
        pred = y[train].mean()
        expected.append(np.mean((y[test] - pred) ** 2))
    got = cv_mse(X, y, 2, ForestParams(n_trees=1, max_depth=0, bootstrap=False), seed=seed)
    assert got == pytest.approx(np.mean(expected), abs=1e-12)


def test_cv_mse_deterministic():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(30, 3))
    y = X[:, 0] + rng.normal(size=30)
    p = ForestParams(n_trees=10, seed=4)
    assert cv_mse(X, y, 5, p) == cv_mse(X, y, 5, p)
    with pytest.raises(ValueError):
        cv_mse(X[:3], y[:3], 5, p)
