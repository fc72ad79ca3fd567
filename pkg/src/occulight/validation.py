"""Input checks shared by the estimators."""
from __future__ import annotations

import numpy as np

from .errors import InvalidDatasetError, NotFittedError, ShapeError


def check_X(X, n_features: int | None = None) -> np.ndarray:
    """2-D finite float array; a single 1-D sample is promoted to one row."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D array, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ShapeError(f"expected {n_features} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ShapeError("input contains non-finite values")
    return X


def check_X_y(X, y, min_per_class: int = 1):
    X = check_X(X)
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ShapeError(f"y must be 1-D with {X.shape[0]} entries, got shape {y.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise InvalidDatasetError("empty training set")
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise InvalidDatasetError("at least two classes are required")
    if np.any(counts < min_per_class):
        raise InvalidDatasetError(f"each class needs at least {min_per_class} samples")
    return X, y


def check_fitted(est, attr: str = "classes_") -> None:
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")
