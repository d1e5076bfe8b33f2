"""Input validation helpers shared across the package."""

import numpy as np


def check_matrix(X, name="X"):
    """Coerce to a 2-D float array, rejecting empty or misshaped input."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={X.ndim}")
    if X.size == 0:
        raise ValueError(f"{name} must be non-empty")
    return X


def check_finite(X, name="X"):
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} must contain only finite values")
    return X


def check_wide(X, name="X"):
    """Require at least as many columns as rows (n <= m)."""
    n, m = X.shape
    if n > m:
        raise ValueError(
            f"{name} must have n <= m (rows <= columns), got shape {X.shape}"
        )
    return X


def check_cost_matrix(C, name="C"):
    """A cost matrix is any finite 2-D float array."""
    return check_finite(check_matrix(C, name), name)
