"""Input checks shared by the estimators and the functional API."""

import numpy as np


class EstimationError(RuntimeError):
    """A fitting step could not produce an estimate."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


def check_vector(values, name="values", min_size=1):
    """Return a finite 1-d float array, raising ValueError otherwise."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_size:
        raise ValueError(f"{name} needs at least {min_size} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_pvalues(values, name="pvalues", min_size=1, open_interval=False):
    arr = check_vector(values, name, min_size)
    if open_interval:
        bad = (arr <= 0) | (arr >= 1)
    else:
        bad = (arr < 0) | (arr > 1)
    if bad.any():
        where = "(0, 1)" if open_interval else "[0, 1]"
        raise ValueError(f"{name} must lie in {where}")
    return arr


def clamp_eps(n):
    """Clamping margin 1/(10 N) used before any beta-scale computation."""
    return 1.0 / (10.0 * n)


def clamp_pvalues(values, n=None):
    arr = np.asarray(values, dtype=float)
    eps = clamp_eps(arr.size if n is None else n)
    return np.clip(arr, eps, 1.0 - eps)
