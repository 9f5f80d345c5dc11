import math

import numpy as np
import pytest

from marlfs_effort import stats
from marlfs_effort.dataset import DataTable
from marlfs_effort.forest import ForestParams, cv_mse, fit_forest
from marlfs_effort.marlfs import MarlfsConfig, run_marlfs
from marlfs_effort.marlfs import engine


def planted(n=40, m=5, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, m))
    y = 3 * X[:, 0] - 2 * X[:, 1] + 0.1 * rng.normal(size=n)
    return DataTable([f"x{i + 1}" for i in range(m)], X, y)


def quick_cfg(**kw):
    base = dict(episodes=2, steps_per_episode=5, batch_size=4, buffer_capacity=50,
                forest=ForestParams(n_trees=8, seed=1))
    base.update(kw)
    return MarlfsConfig(**base)


def test_forced_path_with_zero_networks(monkeypatch):
    real = engine.make_agents

    def zeroed(n, cfg):
        agents = real(n, cfg)
        for a in agents:
            for p in a.online.params() + a.target.params():
                p[...] = 0.0
        return agents

    monkeypatch.setattr(engine, "make_agents", zeroed)
    rng = np.random.default_rng(0)
    x = rng.normal(size=10)
    train = DataTable(["only"], x[:, None], 2 * x)
    res = run_marlfs(train, None, quick_cfg(episodes=1, steps_per_episode=1, epsilon=1.0))
    assert res.best_subset.indices.tolist() == [0]
    assert res.subset_size_trace == [1]
    assert math.isnan(res.val_mse)


def test_run_is_deterministic():
    train, val = planted(seed=1), planted(n=15, seed=2)
    a = run_marlfs(train, val, quick_cfg(seed=4))
    b = run_marlfs(train, val, quick_cfg(seed=4))
    assert a.best_subset == b.best_subset
    assert a.reward_trace == b.reward_trace
    assert a.subset_size_trace == b.subset_size_trace
    assert (a.val_mse, a.val_mae) == (b.val_mse, b.val_mae)


def test_best_cv_mse_reproduced_from_fold_seed():
    train = planted(seed=3)
    cfg = quick_cfg(seed=2, cv_seed=17)
    res = run_marlfs(train, None, cfg)
    assert res.fold_seed == 17
    idx = res.best_subset.indices
    assert res.best_cv_mse == cv_mse(train.X[:, idx], train.y, cfg.cv_folds, cfg.forest, seed=res.fold_seed)
    finite = [v for v in res.mse_trace if not math.isnan(v)]
    assert res.best_cv_mse == min(finite)


def test_traces_have_one_row_per_step():
    res = run_marlfs(planted(seed=5), None, quick_cfg(episodes=3, steps_per_episode=4))
    rows = list(res.trace_rows())
    assert len(rows) == 12
    assert [r[0] for r in rows] == [0] * 4 + [1] * 4 + [2] * 4
    assert [r[1] for r in rows] == [0, 1, 2, 3] * 3
    for _, _, reward, mse_cv, size in rows:
        if size == 0:
            assert reward == -30.0 and math.isnan(mse_cv)


def test_validation_metrics_use_refit_on_best_subset():
    train, val = planted(seed=6), planted(n=12, seed=7)
    cfg = quick_cfg(seed=3)
    res = run_marlfs(train, val, cfg)
    idx = res.best_subset.indices
    pred = fit_forest(train.X[:, idx], train.y, cfg.forest).predict(val.X[:, idx])
    assert res.val_mse == stats.mse(val.y, pred)
    assert res.val_mae == stats.mae(val.y, pred)


def test_config_validation():
    with pytest.raises(ValueError):
        MarlfsConfig(epsilon=1.2)
    with pytest.raises(ValueError):
        MarlfsConfig(gamma=1.0)
    with pytest.raises(ValueError):
        MarlfsConfig(steps_per_episode=0)
    with pytest.raises(ValueError):
        MarlfsConfig(batch_size=3000)
    assert MarlfsConfig(epsilon=0.9, epsilon_is_greedy=False).greedy_probability == pytest.approx(0.1)
