"""Input validation helpers used by the estimators and the functional API."""

from __future__ import annotations

import numpy as np

from .exceptions import DataError


def as_float_matrix(values, name: str = "values", *, allow_empty: bool = False) -> np.ndarray:
    """Coerce to a 2D float64 array and verify every entry is finite.

    A 1D input is treated as a single column.
    """
    try:
        arr = np.asarray(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{name} is not numeric: {exc}") from exc
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DataError(f"{name} must be a 2D array, got ndim={arr.ndim}")
    if not allow_empty and arr.size == 0:
        raise DataError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"invalid data: {name} contains NaN or Inf")
    return arr


def as_float_vector(values, name: str = "values") -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise DataError(f"invalid data: {name} contains NaN or Inf")
    return arr


def check_square(mat: np.ndarray, name: str = "matrix") -> np.ndarray:
    arr = as_float_matrix(mat, name)
    if arr.shape[0] != arr.shape[1]:
        raise DataError(f"{name} must be square, got shape {arr.shape}")
    return arr


def check_lag_order(p: int) -> int:
    if int(p) != p or p < 1:
        raise DataError(f"lag order must be a positive integer, got {p!r}")
    return int(p)


def check_learning_rate(nu: float) -> float:
    nu = float(nu)
    if not 0.0 < nu <= 1.0:
        raise DataError(f"learning rate must be in (0, 1], got {nu}")
    return nu
