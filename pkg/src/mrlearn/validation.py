"""Input validation helpers.

All public entry points normalise their array inputs through these helpers,
so estimators and the functional API reject bad input the same way.
Everything is converted to 64-bit floats.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, EmptySignalError


def as_float_array(x, name: str = "array") -> np.ndarray:
    """Convert to a float64 ndarray, rejecting non-numeric input."""
    arr = np.asarray(x)
    if arr.dtype == object or not np.issubdtype(arr.dtype, np.number):
        raise TypeError(f"{name} must be numeric, got dtype {arr.dtype}")
    return arr.astype(np.float64, copy=False)


def check_signal_1d(x, name: str = "signal") -> np.ndarray:
    arr = as_float_array(x, name)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise EmptySignalError(f"{name} is empty")
    return arr


def check_image_2d(x, name: str = "image", allow_channels: bool = False) -> np.ndarray:
    arr = as_float_array(x, name)
    if allow_channels and arr.ndim == 3:
        pass
    elif arr.ndim != 2:
        expected = "2-dimensional (or 3-dimensional with channels)" if allow_channels else "2-dimensional"
        raise DimensionError(f"{name} must be {expected}, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} is empty (shape {arr.shape})")
    return arr


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < 1:
        raise ValueError(f"{name} must be >= 1, got {value}")
    return int(value)


def require_divisible(length: int, divisor: int, name: str = "signal length") -> None:
    if length % divisor != 0:
        raise DimensionError(f"{name} {length} is not divisible by {divisor}")


def check_batch(x, name: str = "X") -> np.ndarray:
    """Validate a batch of samples: first axis indexes samples."""
    arr = as_float_array(x, name)
    if arr.ndim < 2:
        raise DimensionError(
            f"{name} must have at least 2 dimensions (samples, features...), got shape {arr.shape}"
        )
    if arr.shape[0] == 0:
        raise DimensionError(f"{name} contains no samples")
    return arr


def check_labels(y, n_samples: int, name: str = "y") -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if arr.shape[0] != n_samples:
        raise DimensionError(f"{name} has {arr.shape[0]} entries for {n_samples} samples")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        as_int = arr.astype(np.int64)
        if not np.array_equal(as_int, arr):
            raise TypeError(f"{name} must contain integer class indices")
        arr = as_int
    return arr.astype(np.int64, copy=False)
