"""Input validation helpers used at estimator and function boundaries."""

from __future__ import annotations

import numpy as np

from .exceptions import DomainError, IntegrityError, ShapeError


def as_float_matrix(x, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting non-finite entries."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise IntegrityError(f"{name} contains NaN or Inf entries")
    return arr


def as_float_vector(x, name: str = "v") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise IntegrityError(f"{name} contains NaN or Inf entries")
    return arr


def as_int_vector(x, name: str = "labels") -> np.ndarray:
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise IntegrityError(f"{name} must be integer-valued")
    return arr.astype(np.int64)


def check_lengths_match(*arrays, names: tuple[str, ...] | None = None) -> None:
    lengths = [len(a) for a in arrays]
    if len(set(lengths)) > 1:
        labels = names or tuple(f"arg{i}" for i in range(len(arrays)))
        detail = ", ".join(f"{n}={l}" for n, l in zip(labels, lengths))
        raise ShapeError(f"length mismatch: {detail}")


def check_probability_rows(probs: np.ndarray, name: str = "probs", tol: float = 1e-6) -> np.ndarray:
    """Validate that every row of `probs` is a probability vector."""
    arr = as_float_matrix(probs, name)
    if np.any(arr < -tol):
        raise DomainError(f"{name} has negative entries")
    sums = arr.sum(axis=1)
    if arr.shape[1] and np.any(np.abs(sums - 1.0) > tol):
        raise DomainError(f"{name} rows must sum to 1 (max deviation {np.abs(sums - 1.0).max():.3g})")
    return arr


def check_positive_scalar(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")
    return value
