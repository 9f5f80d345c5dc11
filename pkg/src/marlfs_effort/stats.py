"""Scalar statistics: error metrics, correlation, Gini impurity, subset redundancy."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

log = logging.getLogger(__name__)


def _pair(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.size} vs {yhat.size}")
    if y.size == 0:
        raise ValueError("empty input")
    return y, yhat


def mse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean((yhat - y) ** 2))


def mae(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def pearson_flagged(x, y) -> tuple[float, bool]:
    """Pearson r plus a flag that is True when either input is constant (r reported as 0)."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("pearson needs at least 2 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        return 0.0, True
    r = float(np.dot(dx, dy)) / (np.sqrt(sxx) * np.sqrt(syy))
    return float(np.clip(r, -1.0, 1.0)), False


def pearson(x, y) -> float:
    return pearson_flagged(x, y)[0]


def spearman(x, y) -> float:
    """Rank correlation: average ranks for ties, then Pearson on the ranks."""
    return pearson(rankdata(x, method="average"), rankdata(y, method="average"))


def gini(p: Sequence[float]) -> float:
    """Gini impurity ``1 - sum(p_i^2)`` of a class-proportion vector."""
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0:
        raise ValueError("no class proportions")
    if np.any(p < 0):
        raise ValueError("negative class proportion")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"class proportions sum to {p.sum()!r}, expected 1")
    return float(1.0 - np.sum(p * p))


@dataclass(frozen=True)
class CorrMatrix:
    r: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.r.ndim != 2 or self.r.shape[0] != self.r.shape[1]:
            raise ValueError("correlation matrix must be square")

    @property
    def n(self) -> int:
        return self.r.shape[0]

    def abs(self) -> np.ndarray:
        return np.abs(self.r)


def corr_matrix(X, feature_names: Iterable[str] = ()) -> CorrMatrix:
    """Pairwise Pearson over the columns of ``X``.

    Constant columns get 0 off the diagonal; the diagonal is always 1.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("corr_matrix needs a 2-D matrix with at least 2 rows")
    D = X - X.mean(axis=0)
    ss = np.einsum("ij,ij->j", D, D)
    degenerate = ss == 0.0
    if degenerate.any():
        log.debug("constant columns in corr_matrix: %s", np.flatnonzero(degenerate).tolist())
    norm = np.sqrt(np.where(degenerate, 1.0, ss))
    Z = D / norm
    r = Z.T @ Z
    r[degenerate, :] = 0.0
    r[:, degenerate] = 0.0
    r = np.clip(0.5 * (r + r.T), -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return CorrMatrix(r=r, feature_names=tuple(feature_names))


def redundancy(subset, c: CorrMatrix) -> float:
    """Sum of |r_ij| over unordered pairs in ``subset``, divided by the subset size."""
    idx = np.asarray(subset_indices(subset), dtype=int)
    k = idx.size
    if k <= 1:
        return 0.0
    if idx.min() < 0 or idx.max() >= c.n:
        raise IndexError("subset index outside correlation matrix")
    sub = np.abs(c.r[np.ix_(idx, idx)])
    pair_sum = (sub.sum() - np.trace(sub)) / 2.0
    return float(pair_sum / k)


def subset_indices(subset) -> np.ndarray:
    """Accept a FeatureSubset, a boolean mask, or an index sequence."""
    if hasattr(subset, "indices"):
        return np.asarray(subset.indices, dtype=int)
    arr = np.asarray(subset)
    if arr.dtype == bool:
        return np.flatnonzero(arr)
    return arr.astype(int).ravel()
