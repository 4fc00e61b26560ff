"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np

from .errors import DataError


def as_float_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array with finite values."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DataError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    if arr.shape[0] == 0:
        raise DataError(f"{name} is empty")
    return arr


def as_label_array(y, n_classes: int, name: str = "y") -> np.ndarray:
    """Coerce to integer labels and range-check against n_classes."""
    labels = np.asarray(y, dtype=np.int64).ravel()
    if labels.size == 0:
        raise DataError(f"{name} is empty")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise DataError(
            f"{name} labels must lie in 0..{n_classes - 1}, "
            f"got range [{labels.min()}, {labels.max()}]"
        )
    return labels


def check_same_length(a, b, what: str = "inputs") -> None:
    if len(a) != len(b):
        raise DataError(f"length mismatch between {what}: {len(a)} != {len(b)}")
