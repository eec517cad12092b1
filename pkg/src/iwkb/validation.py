"""Small input-validation helpers used at public API boundaries."""

import numpy as np

from .errors import DomainError


def as_float_array(values, name="values"):
    """Coerce to a 1-D float array, rejecting non-finite entries."""
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def check_grid(grid, name="grid"):
    """Validate a nonempty, sorted, finite coordinate grid."""
    arr = as_float_array(grid, name)
    if arr.size == 0:
        raise DomainError(f"{name} is empty")
    if arr.size > 1 and np.any(np.diff(arr) < 0):
        raise DomainError(f"{name} must be sorted in increasing order")
    return arr


def check_strictly_increasing(arr, name="values"):
    arr = as_float_array(arr, name)
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise DomainError(f"{name} must be strictly increasing")
    return arr


def check_probability_pair(t, r, tol=1e-9):
    """Validate a transmission/reflection pair: both in [0, 1], summing to 1."""
    t = float(t)
    r = float(r)
    if not (0.0 <= t <= 1.0 and 0.0 <= r <= 1.0):
        raise DomainError(f"coefficients must lie in [0, 1], got T={t}, R={r}")
    if abs(t + r - 1.0) > tol:
        raise DomainError(f"T + R must equal 1, got {t + r}")
    return t, r


def check_positive(value, name="value"):
    value = float(value)
    if not value > 0.0:
        raise DomainError(f"{name} must be positive, got {value}")
    return value
