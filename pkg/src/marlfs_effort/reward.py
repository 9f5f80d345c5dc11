"""Reward shaping for subset evaluation.

The accuracy term maps a cross-validated MSE in [0, inf) onto (0, 1] with
``exp(-k * mse)``; redundancy among the selected features is subtracted.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RewardParams:
    alpha: float = 1.0
    beta: float = 0.3
    k_decay: float = 0.01
    scale: float = 100.0

    def __post_init__(self):
        if self.k_decay <= 0:
            raise ValueError("k_decay must be > 0")
        if self.scale <= 0:
            raise ValueError("scale must be > 0")

    @property
    def empty_penalty(self) -> float:
        """Reward handed out when no feature is selected."""
        return -self.scale * self.beta


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def transform_sigmoid2(x):
    """2 * (1 - sigmoid(x)); scalar in, scalar out."""
    # 1 - sigmoid(x) == sigmoid(-x), without cancellation for large x
    val = 2.0 * sigmoid(-np.atleast_1d(np.asarray(x, dtype=float)))
    return float(val[0]) if np.ndim(x) == 0 else val


def transform_exp(x, k: float = 1.0):
    if k <= 0:
        raise ValueError("k must be > 0")
    val = np.exp(-k * np.asarray(x, dtype=float))
    return float(val) if np.ndim(x) == 0 else val


def d_sigmoid2(x):
    x1 = np.atleast_1d(np.asarray(x, dtype=float))
    val = -2.0 * sigmoid(x1) * sigmoid(-x1)
    return float(val[0]) if np.ndim(x) == 0 else val


def d_exp(x, k: float = 1.0):
    val = -k * np.exp(-k * np.asarray(x, dtype=float))
    return float(val) if np.ndim(x) == 0 else val


CURVE_COLUMNS = ("x", "sigmoid2", "exp", "d_sigmoid2", "d_exp")


def transform_curves(xs, k: float = 1.0) -> np.ndarray:
    """Both candidate transforms and their analytic derivatives on ``xs``.

    Returns an array of shape (len(xs), 5) in ``CURVE_COLUMNS`` order.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1:
        raise ValueError("xs must be 1-D")
    if np.any(np.diff(xs) < 0):
        raise ValueError("xs must be sorted ascending")
    return np.column_stack([xs, transform_sigmoid2(xs), transform_exp(xs, k), d_sigmoid2(xs), d_exp(xs, k)])


def write_curves(path, table: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for row in table:
            w.writerow([f"{v:.10g}" for v in row])


def compute_reward(mse: float, rbar: float, p: RewardParams = RewardParams()) -> float:
    if mse < 0 or rbar < 0:
        raise ValueError("mse and rbar must be non-negative")
    return p.scale * (p.alpha * math.exp(-p.k_decay * mse) - p.beta * rbar)
