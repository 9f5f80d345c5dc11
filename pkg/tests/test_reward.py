import math

import numpy as np
import pytest

from marlfs_effort.reward import (
    RewardParams,
    compute_reward,
    d_exp,
    d_sigmoid2,
    transform_curves,
    transform_exp,
    transform_sigmoid2,
)


def test_sigmoid2_values():
    assert transform_sigmoid2(0.0) == 1.0
    assert transform_sigmoid2(1.0) == pytest.approx(2 * (1 - 1 / (1 + math.exp(-1))), abs=1e-15)
    assert transform_sigmoid2(1.0) == pytest.approx(0.537883, abs=1e-6)
    assert transform_sigmoid2(800.0) == 0.0


def test_exp_values():
    assert transform_exp(0.0, 1.0) == 1.0
    assert transform_exp(1.0, 1.0) == pytest.approx(0.367879, abs=1e-6)
    assert transform_exp(100.0, 0.01) == pytest.approx(math.exp(-1), abs=1e-15)
    with pytest.raises(ValueError):
        transform_exp(1.0, 0.0)


def test_transforms_decrease_on_domain():
    xs = np.linspace(0, 30, 301)
    assert np.all(np.diff(transform_sigmoid2(xs)) < 0)
    assert np.all(np.diff(transform_exp(xs, 0.2)) < 0)
    assert np.all((transform_sigmoid2(xs) > 0) & (transform_sigmoid2(xs) <= 1))


def test_curves_table():
    xs = np.round(np.arange(0, 1001) * 0.01, 10)
    t = transform_curves(xs, k=1.0)
    assert t.shape == (1001, 5)
    assert t[0, 1] == 1.0 and t[0, 2] == 1.0
    assert t[0, 3] == -0.5 and t[0, 4] == -1.0
    assert t[100, 0] == 1.0 and t[100, 2] == pytest.approx(0.367879, abs=1e-6)
    with pytest.raises(ValueError):
        transform_curves([1.0, 0.5])


@pytest.mark.parametrize("k", [1.0, 0.01, 0.3])
def test_derivatives_match_central_differences(k):
    h = 1e-5
    xs = np.linspace(0, 10, 1001)
    t = transform_curves(xs, k)
    fd1 = (transform_sigmoid2(xs + h) - transform_sigmoid2(xs - h)) / (2 * h)
    fd2 = (transform_exp(xs + h, k) - transform_exp(xs - h, k)) / (2 * h)
    assert np.max(np.abs(t[:, 3] - fd1)) < 1e-6
    assert np.max(np.abs(t[:, 4] - fd2)) < 1e-6


def test_exp_gradient_dominates_for_large_mse():
    # with the configured decay k=0.01 the exponential's slope wins once x
    # exceeds about 5.35 and keeps winning; with k=1 it is about half as steep
    xs = np.linspace(5, 50, 4501)
    wins = np.abs(d_exp(xs, 0.01)) > np.abs(d_sigmoid2(xs))
    first = int(np.argmax(wins))
    assert wins[first:].all()
    assert xs[first] < 5.5
    assert np.all(np.abs(d_sigmoid2(xs)) > 0)
    ratio = np.abs(d_exp(xs, 1.0)) / np.abs(d_sigmoid2(xs))
    assert np.all((ratio > 0.49) & (ratio < 0.51))


def test_reward_monotone_grids():
    p = RewardParams()
    mses = np.linspace(0, 400, 81)
    rbars = np.linspace(0, 2, 41)
    grid = np.array([[compute_reward(m, r, p) for r in rbars] for m in mses])
    assert np.all(np.diff(grid, axis=0) < 0)
    assert np.all(np.diff(grid, axis=1) < 0)


def test_compute_reward_examples():
    p = RewardParams(alpha=1.0, beta=0.3, k_decay=0.01, scale=100.0)
    assert compute_reward(0.0, 0.0, p) == 100.0
    assert compute_reward(100.0, 0.5, p) == pytest.approx(100 * (math.exp(-1) - 0.15), abs=1e-12)
    assert compute_reward(100.0, 0.5, p) == pytest.approx(21.7879, abs=1e-4)
    assert compute_reward(1e9, 1.0, p) == pytest.approx(-30.0)
    assert p.empty_penalty == -30.0


def test_reward_params_validation():
    with pytest.raises(ValueError):
        RewardParams(k_decay=0)
    with pytest.raises(ValueError):
        RewardParams(scale=-1)
    with pytest.raises(ValueError):
        compute_reward(-1.0, 0.0)


def test_reward_bounds():
    p = RewardParams()
    for mse in np.linspace(0, 500, 51):
        for rbar in np.linspace(0, 3, 31):
            r = compute_reward(mse, rbar, p)
            assert -p.scale * p.beta * 3 < r <= p.scale * p.alpha
