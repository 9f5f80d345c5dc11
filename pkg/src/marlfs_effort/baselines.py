"""Comparison methods: variance filter, recursive feature elimination, expert estimates."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import stats
from .dataset import DataTable, SchemaError
from .forest import ForestParams, fit_forest, importance
from .marlfs.env import FeatureSubset

log = logging.getLogger(__name__)


class DegenerateSelectionError(ValueError):
    pass


def variance_filter(X_raw, threshold: float = 1.0) -> FeatureSubset:
    """Keep features whose population variance is at least ``threshold``.

    Meant for unscaled features: after standardization every variance is 1.
    """
    X_raw = np.asarray(X_raw, dtype=float)
    keep = X_raw.var(axis=0) >= threshold
    if not keep.any():
        raise DegenerateSelectionError(f"no feature has variance >= {threshold}")
    return FeatureSubset(keep)


@dataclass
class RfeResult:
    selected: FeatureSubset
    feature_names: list[str]
    # (name, round) in elimination order; survivors carry round n_rounds + 1
    ranking: list[tuple[str, int]]
    n_rounds: int

    @property
    def selected_names(self) -> list[str]:
        return [self.feature_names[i] for i in self.selected.indices]

    def ranks(self) -> dict[str, int]:
        """1 for survivors, 2 for the last eliminated, and so on."""
        last = self.n_rounds + 1
        return {name: last - rnd + 1 for name, rnd in self.ranking}


def rfe(train: DataTable, k: int, step: int = 1, params: ForestParams = ForestParams()) -> RfeResult:
    """Refit the forest on surviving features and drop the least important until ``k`` remain.

    Ties in importance eliminate the higher feature index first.
    """
    return rfe_path(train, [k], step, params)[k]


def rfe_path(train: DataTable, ks, step: int = 1,
             params: ForestParams = ForestParams()) -> dict[int, RfeResult]:
    """One elimination pass down to ``min(ks)``, snapshotting the result at every k.

    Each round depends only on the surviving set, so the snapshot at k equals
    a separate ``rfe(train, k)`` run.
    """
    m = train.n_features
    ks = sorted(set(int(k) for k in ks), reverse=True)
    for k in ks:
        if not 1 <= k < m:
            raise ValueError(f"k must satisfy 1 <= k < {m}, got {k}")
    if step < 1:
        raise ValueError("step must be >= 1")
    alive = list(range(m))
    ranking: list[tuple[str, int]] = []
    out: dict[int, RfeResult] = {}
    rnd = 0
    for k in ks:
        while len(alive) > k:
            rnd += 1
            forest = fit_forest(train.X[:, alive], train.y, params)
            imp = importance(forest)
            n_drop = min(step, len(alive) - k)
            order = sorted(range(len(alive)), key=lambda j: (imp[j], -alive[j]))
            gone = [alive[j] for j in order[:n_drop]]
            ranking.extend((train.feature_names[i], rnd) for i in gone)
            alive = [i for i in alive if i not in set(gone)]
            log.debug("rfe round %d: dropped %s", rnd, gone)
        final = ranking + [(train.feature_names[i], rnd + 1) for i in alive]
        out[k] = RfeResult(FeatureSubset.from_indices(alive, m), list(train.feature_names), final, rnd)
    return out


def expert_metrics(val: DataTable) -> tuple[float, float]:
    """(MSE, MAE) of the expert duration estimate against the label, validation rows only."""
    if val.expert_estimate is None:
        raise SchemaError("no expert-estimate column on this table")
    return stats.mse(val.y, val.expert_estimate), stats.mae(val.y, val.expert_estimate)


def evaluate_subset(train: DataTable, val: DataTable, subset=None,
                    params: ForestParams = ForestParams()) -> tuple[float, float]:
    """Fit on ``train`` restricted to ``subset`` (all features if None); (MSE, MAE) on ``val``."""
    idx = np.arange(train.n_features) if subset is None else stats.subset_indices(subset)
    if idx.size == 0:
        raise DegenerateSelectionError("empty feature subset")
    model = fit_forest(train.X[:, idx], train.y, params)
    pred = model.predict(val.X[:, idx])
    return stats.mse(val.y, pred), stats.mae(val.y, pred)


class OverfitProbe(NamedTuple):
    train_mse: float
    val_mse: float
    train_mae: float
    val_mae: float


def filter_overfit_probe(train: DataTable, val: DataTable, subset,
                         params: ForestParams = ForestParams()) -> OverfitProbe:
    """Resubstitution error on ``train`` next to held-out error on ``val``."""
    idx = stats.subset_indices(subset)
    if idx.size == 0:
        raise DegenerateSelectionError("empty feature subset")
    model = fit_forest(train.X[:, idx], train.y, params)
    tp = model.predict(train.X[:, idx])
    vp = model.predict(val.X[:, idx])
    return OverfitProbe(stats.mse(train.y, tp), stats.mse(val.y, vp),
                        stats.mae(train.y, tp), stats.mae(val.y, vp))
