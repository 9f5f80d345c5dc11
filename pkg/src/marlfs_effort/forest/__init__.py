"""CART regression trees and bagged random forests."""
from .forest import (
    ForestParams,
    RegressionForest,
    Tree,
    cv_mse,
    fit_forest,
    fit_tree,
    fold_indices,
    importance,
    predict_forest,
)

__all__ = [
    "ForestParams",
    "RegressionForest",
    "Tree",
    "cv_mse",
    "fit_forest",
    "fit_tree",
    "fold_indices",
    "importance",
    "predict_forest",
]
