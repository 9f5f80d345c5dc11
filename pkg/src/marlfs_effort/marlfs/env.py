"""Shared environment for the feature agents: fixed-length state and subset reward."""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .. import stats
from ..dataset import DataTable
from ..forest import ForestParams, cv_mse
from ..reward import RewardParams, compute_reward

STAT_NAMES = ("mean", "std", "min", "p25", "median", "p75", "max", "abs_corr_label")
STATE_DIM = len(STAT_NAMES)


class FeatureSubset:
    """Selection mask over feature indices."""

    __slots__ = ("mask",)

    def __init__(self, mask):
        self.mask = np.asarray(mask, dtype=bool).copy()
        self.mask.flags.writeable = False

    @classmethod
    def from_indices(cls, indices, n_features: int) -> "FeatureSubset":
        mask = np.zeros(n_features, dtype=bool)
        mask[np.asarray(list(indices), dtype=int)] = True
        return cls(mask)

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def cardinality(self) -> int:
        return int(self.mask.sum())

    def key(self) -> bytes:
        return np.packbits(self.mask).tobytes() + self.mask.size.to_bytes(4, "little")

    def __len__(self) -> int:
        return self.cardinality

    def __eq__(self, other) -> bool:
        return isinstance(other, FeatureSubset) and np.array_equal(self.mask, other.mask)

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"FeatureSubset({self.indices.tolist()})"


def feature_statistics(X, y) -> np.ndarray:
    """Per-feature descriptor rows, shape (n_features, 8), columns as in ``STAT_NAMES``."""
    X = np.asarray(X, dtype=float)
    q = np.percentile(X, [25, 50, 75], axis=0)
    corr = np.array([abs(stats.pearson(X[:, j], y)) for j in range(X.shape[1])])
    return np.column_stack([X.mean(axis=0), X.std(axis=0), X.min(axis=0),
                            q[0], q[1], q[2], X.max(axis=0), corr])


def aggregate_state(indices, feat_stats: np.ndarray, abs_corr: np.ndarray) -> np.ndarray:
    """One-hop graph aggregation of the selected features' descriptor rows.

    Nodes are the selected features, edge weights |r_ij| with unit self-loops,
    normalized as D^-1/2 A D^-1/2; the state is the column mean of A_hat @ F.
    """
    idx = np.asarray(indices, dtype=int)
    if idx.size == 0:
        return np.zeros(feat_stats.shape[1])
    A = abs_corr[np.ix_(idx, idx)].copy()
    np.fill_diagonal(A, 1.0)
    d = 1.0 / np.sqrt(A.sum(axis=1))
    A_hat = A * d[:, None] * d[None, :]
    return (A_hat @ feat_stats[idx]).mean(axis=0)


def state_repr(subset, train: DataTable, c: stats.CorrMatrix) -> np.ndarray:
    return aggregate_state(stats.subset_indices(subset), feature_statistics(train.X, train.y), c.abs())


class SubsetEvaluator:
    """Cross-validated forest MSE per subset, memoized.

    ``cv_mse`` is a pure function of (subset, forest params, folds, fold seed),
    so repeated subsets reuse the stored value.
    """

    def __init__(self, X, y, forest: ForestParams, folds: int = 5, fold_seed: Optional[int] = None):
        self.X = np.ascontiguousarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.forest = forest
        self.folds = folds
        self.fold_seed = forest.seed if fold_seed is None else fold_seed
        self._cache: dict[bytes, float] = {}
        self.evaluations = 0

    def __call__(self, subset: FeatureSubset) -> float:
        key = subset.key()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        val = cv_mse(self.X[:, subset.indices], self.y, self.folds, self.forest, seed=self.fold_seed)
        self._cache[key] = val
        self.evaluations += 1
        return val


def env_step(actions, train: DataTable, c: stats.CorrMatrix, cfg,
             evaluator: Optional[SubsetEvaluator] = None) -> tuple[FeatureSubset, float, float]:
    """Apply one action per agent; returns (subset, reward, cv_mse).

    An empty subset gets the fixed penalty ``-scale * beta`` and ``nan`` MSE.
    """
    actions = np.asarray(actions, dtype=int)
    if actions.shape != (train.n_features,):
        raise ValueError(f"expected {train.n_features} actions, got {actions.shape}")
    subset = FeatureSubset(actions == 1)
    rp: RewardParams = cfg.reward
    if subset.cardinality == 0:
        return subset, rp.empty_penalty, math.nan
    if evaluator is None:
        evaluator = SubsetEvaluator(train.X, train.y, cfg.forest, cfg.cv_folds, cfg.fold_seed)
    mse_cv = evaluator(subset)
    return subset, compute_reward(mse_cv, stats.redundancy(subset, c), rp), mse_cv
