from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _kernels as K

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ForestParams:
    """Random forest settings.

    ``max_features=None`` uses every feature at every split, which is what a
    default scikit-learn ``RandomForestRegressor`` does for regression.
    """

    n_trees: int = 100
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    max_features: Optional[int] = None
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be >= 1 or None")

    def kernel_args(self, n_features: int) -> tuple[int, int, int]:
        depth = -1 if self.max_depth is None else self.max_depth
        mf = n_features if self.max_features is None else min(self.max_features, n_features)
        return depth, self.min_samples_split, mf


@dataclass
class Tree:
    """A fitted regression tree as flat node arrays (``feature == -1`` marks a leaf)."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    sse: np.ndarray
    n_features: int

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] == K.LEAF

    def predict(self, X) -> np.ndarray:
        X = _check_X(X, self.n_features)
        return K.predict_rows(self.feature, self.threshold, self.left, self.right, self.value, 0, X)

    def predict_one(self, x) -> float:
        return float(self.predict(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def depth(self) -> int:
        def walk(node):
            if self.is_leaf(node):
                return 0
            return 1 + max(walk(self.left[node]), walk(self.right[node]))
        return walk(0)

    def to_dict(self, node: int = 0) -> dict:
        if self.is_leaf(node):
            return {"leaf": float(self.value[node]), "n_samples": int(self.n_samples[node])}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "n_samples": int(self.n_samples[node]),
            "left": self.to_dict(int(self.left[node])),
            "right": self.to_dict(int(self.right[node])),
        }

    def impurity_decrease(self) -> np.ndarray:
        """Per-feature SSE reduction summed over this tree's splits."""
        out = np.zeros(self.n_features)
        split = np.flatnonzero(self.feature != K.LEAF)
        gain = self.sse[split] - self.sse[self.left[split]] - self.sse[self.right[split]]
        np.add.at(out, self.feature[split], gain)
        return out


@dataclass
class RegressionForest:
    params: ForestParams
    n_features: int
    tree_seeds: np.ndarray
    # concatenated node arrays of all trees; offsets[t] is tree t's first node
    _nodes: tuple = field(repr=False)
    _offsets: np.ndarray = field(repr=False)
    criterion: str = "squared_error"

    @property
    def n_trees(self) -> int:
        return int(self._offsets.size - 1)

    @property
    def trees(self) -> list[Tree]:
        out = []
        for t in range(self.n_trees):
            a, b = self._offsets[t], self._offsets[t + 1]
            parts = [arr[a:b] for arr in self._nodes]
            out.append(Tree(*parts, n_features=self.n_features))
        return out

    def tree_predictions(self, X) -> np.ndarray:
        X = _check_X(X, self.n_features)
        f, th, l, r, v = self._nodes[:5]
        return K.predict_forest_rows(f, th, l, r, v, self._offsets, X)

    def predict(self, X) -> np.ndarray:
        return self.tree_predictions(X).mean(axis=0)

    def predict_one(self, x) -> float:
        return float(self.predict(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "n_features": self.n_features,
            "params": {
                "n_trees": self.params.n_trees,
                "max_depth": self.params.max_depth,
                "min_samples_split": self.params.min_samples_split,
                "max_features": self.params.max_features,
                "bootstrap": self.params.bootstrap,
                "seed": self.params.seed,
            },
            "tree_seeds": [int(s) for s in self.tree_seeds],
            "trees": [t.to_dict() for t in self.trees],
        }


def _check_X(X, n_features: Optional[int] = None) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got {X.shape[1]}")
    return X


def _check_Xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = _check_X(X)
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    if X.shape[0] == 0:
        raise ValueError("empty input")
    if X.shape[0] != y.size:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.size}")
    return X, y


def fit_tree(X, y, params: ForestParams = ForestParams(), rng=None) -> Tree:
    """Grow a single CART regression tree on all rows of ``X``."""
    X, y = _check_Xy(X, y)
    depth, mss, mf = params.kernel_args(X.shape[1])
    seed = 0
    if mf < X.shape[1]:
        rng = np.random.default_rng(params.seed) if rng is None else rng
        seed = int(rng.integers(2**31 - 1))
    weights = np.ones(X.shape[0], dtype=np.int64)
    parts = K.build_tree(X, y, weights, K.presort(X), depth, mss, mf, seed)
    return Tree(*parts, n_features=X.shape[1])


@lru_cache(maxsize=256)
def _bootstrap_plan(seed: int, n: int, n_trees: int, bootstrap: bool) -> tuple[np.ndarray, np.ndarray]:
    # one generator per tree, keyed on (seed, tree index), so any tree can be
    # rebuilt on its own and the order of fitting does not matter
    boot = np.empty((n_trees, n), dtype=np.int64)
    seeds = np.empty(n_trees, dtype=np.int64)
    for t in range(n_trees):
        rng = np.random.default_rng([seed, t])
        boot[t] = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        seeds[t] = rng.integers(2**31 - 1)
    boot.flags.writeable = False
    seeds.flags.writeable = False
    return boot, seeds


def fit_forest(X, y, params: ForestParams = ForestParams()) -> RegressionForest:
    X, y = _check_Xy(X, y)
    depth, mss, mf = params.kernel_args(X.shape[1])
    boot, seeds = _bootstrap_plan(params.seed, X.shape[0], params.n_trees, params.bootstrap)
    *nodes, offsets = K.build_forest(X, y, boot, seeds, depth, mss, mf)
    return RegressionForest(params=params, n_features=X.shape[1], tree_seeds=seeds.copy(),
                            _nodes=tuple(nodes), _offsets=offsets)


def predict_forest(f: RegressionForest, X) -> np.ndarray:
    return f.predict(X)


def importance(f: RegressionForest) -> np.ndarray:
    """Mean decrease in impurity per feature, normalized to sum to 1.

    Each split contributes its SSE reduction divided by the tree's root sample
    count. A forest without any split yields all zeros.
    """
    total = np.zeros(f.n_features)
    for t in f.trees:
        total += t.impurity_decrease() / t.n_samples[0]
    total /= f.n_trees
    s = total.sum()
    if s <= 0.0:
        log.warning("forest has no informative splits; importances are all zero")
        return np.zeros(f.n_features)
    return total / s


def fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffle, then contiguous folds (sizes differ by at most one)."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if folds > n:
        raise ValueError(f"folds ({folds}) exceeds rows ({n})")
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def cv_mse(X, y, folds: int = 5, params: ForestParams = ForestParams(),
           seed: Optional[int] = None) -> float:
    """Mean of per-fold validation MSEs; ``seed`` (default ``params.seed``) fixes the fold shuffle."""
    X, y = _check_Xy(X, y)
    n = X.shape[0]
    parts = fold_indices(n, folds, params.seed if seed is None else seed)
    scores = []
    for k, val_idx in enumerate(parts):
        train_idx = np.concatenate([p for j, p in enumerate(parts) if j != k])
        model = fit_forest(X[train_idx], y[train_idx], params)
        resid = model.predict(X[val_idx]) - y[val_idx]
        scores.append(float(np.mean(resid * resid)))
    return float(np.mean(scores))
