import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from marlfs_effort import stats
from oracles import pearson_direct, spearman_direct


def test_mse_examples():
    assert stats.mse([1.5, 2, 3], [1.5, 2, 3]) == 0
    assert stats.mse([2, 2, 5], [1, 2, 3]) == pytest.approx(5 / 3, abs=1e-15)


def test_mae_examples():
    assert stats.mae([4, 4], [4, 4]) == 0
    assert stats.mae([2, 2, 5], [1, 2, 3]) == 1.0


@pytest.mark.parametrize("fn", [stats.mse, stats.mae])
def test_metric_errors(fn):
    with pytest.raises(ValueError):
        fn([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        fn([], [])


# quarter-unit grid: squared residuals cannot underflow to zero
finite = st.integers(-4_000_000, 4_000_000).map(lambda v: v / 4)


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=30))
def test_metrics_nonnegative_and_zero_iff_equal(pairs):
    y = np.array([p[0] for p in pairs])
    yhat = np.array([p[1] for p in pairs])
    assert stats.mse(y, yhat) >= 0
    assert stats.mae(y, yhat) >= 0
    assert (stats.mse(y, yhat) == 0) == bool(np.all(y == yhat))


def test_pearson_examples():
    x = np.array([1.0, 4.0, 2.0, 8.0])
    assert stats.pearson(x, x) == pytest.approx(1.0, abs=1e-15)
    assert stats.pearson(x, -x) == pytest.approx(-1.0, abs=1e-15)
    assert stats.pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(pearson_direct([1, 2, 3], [1, 2, 4]), abs=1e-12)


def test_pearson_degenerate_flag():
    r, flag = stats.pearson_flagged([3, 3, 3], [1, 2, 3])
    assert (r, flag) == (0.0, True)
    r, flag = stats.pearson_flagged([1, 2, 3], [1, 2, 3])
    assert not flag
    with pytest.raises(ValueError):
        stats.pearson([1.0], [2.0])


@settings(max_examples=60)
@given(arrays(float, 12, elements=st.floats(-100, 100)),
       arrays(float, 12, elements=st.floats(-100, 100)),
       st.floats(0.1, 10), st.floats(-50, 50), st.booleans())
def test_pearson_affine_equivariance(x, y, a, b, negate):
    if np.ptp(x) < 1e-3 or np.ptp(y) < 1e-3:
        return
    a = -a if negate else a
    assert stats.pearson(a * x + b, y) == pytest.approx(np.sign(a) * stats.pearson(x, y), abs=1e-9)


def test_spearman_monotone_and_ties():
    x = np.array([1.0, 2.0, 2.0, 5.0, 7.0])
    y = np.array([3.0, 1.0, 4.0, 4.0, 9.0])
    assert stats.spearman(x, y) == pytest.approx(spearman_direct(x, y), abs=1e-12)
    assert stats.spearman(x, np.exp(x)) == pytest.approx(1.0)
    assert stats.spearman(x, -x ** 3) == pytest.approx(-1.0)


def test_gini_examples():
    assert stats.gini([1.0]) == 0.0
    assert stats.gini([0.5, 0.5]) == 0.5
    assert stats.gini([0.25, 0.75]) == pytest.approx(0.375, abs=1e-15)


def test_gini_rejects_bad_proportions():
    with pytest.raises(ValueError):
        stats.gini([0.5, 0.6])
    with pytest.raises(ValueError):
        stats.gini([1.2, -0.2])


@pytest.mark.parametrize("k", [2, 3, 4])
def test_gini_maximized_at_uniform(k):
    grid = np.linspace(0, 1, 21)
    best = 0.0
    for p in itertools.product(grid, repeat=k - 1):
        last = 1.0 - sum(p)
        if last < -1e-12:
            continue
        props = np.array([*p, max(last, 0.0)])
        props /= props.sum()
        g = stats.gini(props)
        assert g <= 1 - 1 / k + 1e-12
        best = max(best, g)
    assert stats.gini(np.full(k, 1 / k)) == pytest.approx(1 - 1 / k)
    assert best <= stats.gini(np.full(k, 1 / k)) + 1e-12


def test_corr_matrix_basic():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(5, 4))
    c = stats.corr_matrix(X)
    assert np.array_equal(c.r, c.r.T)
    assert np.all(np.diag(c.r) == 1.0)
    for i in range(4):
        for j in range(4):
            if i != j:
                assert c.r[i, j] == pytest.approx(pearson_direct(X[:, i], X[:, j]), abs=1e-12)


def test_corr_matrix_duplicate_and_constant_columns():
    X = np.array([[1.0, 1.0, 5.0], [2.0, 2.0, 5.0], [4.0, 4.0, 5.0]])
    c = stats.corr_matrix(X)
    assert c.r[0, 1] == pytest.approx(1.0)
    assert c.r[0, 2] == 0.0 and c.r[2, 1] == 0.0
    assert c.r[2, 2] == 1.0


def test_redundancy_examples():
    X = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 1.0], [3.0, 3.0, 0.0], [4.0, 4.0, 1.0]])
    c = stats.corr_matrix(X)
    assert stats.redundancy([0], c) == 0.0
    assert stats.redundancy([], c) == 0.0
    assert stats.redundancy([0, 1], c) == pytest.approx(0.5)
    # exactly orthogonal centered columns
    Z = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]])
    assert stats.redundancy([0, 1, 2], stats.corr_matrix(Z)) == pytest.approx(0.0, abs=1e-15)


def test_redundancy_numerator_monotone():
    rng = np.random.default_rng(8)
    c = stats.corr_matrix(rng.normal(size=(30, 8)))
    order = rng.permutation(8)
    prev = 0.0
    for k in range(1, 9):
        num = stats.redundancy(order[:k], c) * k
        assert num >= prev - 1e-12
        prev = num
