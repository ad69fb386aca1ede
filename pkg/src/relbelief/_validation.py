"""Input checks shared by the estimators."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_scalar


class DomainError(ValueError):
    """A quantity is requested outside the region where it is defined."""


def positive(value, name: str, *, include_zero: bool = False) -> float:
    value = check_scalar(value, name, numbers.Real, min_val=0.0, include_boundaries="left" if include_zero else "neither")
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return float(value)


def real(value, name: str) -> float:
    value = check_scalar(value, name, numbers.Real)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return float(value)


def count(value, name: str, *, min_val: int = 1) -> int:
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    return int(check_scalar(value, name, numbers.Integral, min_val=min_val))


def open_unit(value, name: str) -> float:
    return float(check_scalar(value, name, numbers.Real, min_val=0.0, max_val=1.0, include_boundaries="neither"))


def probability_vector(values, name: str, *, tol: float = 1e-6) -> np.ndarray:
    """Return ``values`` as a normalized probability vector.

    Sums within ``tol`` of one are rescaled; anything further off is rejected.
    """
    p = np.asarray(values, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d sequence")
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise ValueError(f"{name} must contain finite non-negative values")
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"{name} sums to {total!r}, not 1 (tolerance {tol})")
    # leave vectors that already sum to 1 up to rounding untouched, so
    # normalizing is idempotent and serialized grids read back bit-for-bit
    return p if abs(total - 1.0) <= 4 * np.finfo(float).eps else p / total
