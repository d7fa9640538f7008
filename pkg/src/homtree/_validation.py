"""Input checks for the estimator wrappers.

``sklearn.utils.check_array`` refuses complex input, and radial data on the
tree is complex, so the checks here mirror it for complex arrays.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError


def check_radial_array(X, name="X", ensure_min_radius=0):
    """Return X as a 2-D complex array of shape (n_samples, N + 1).

    A 1-D input is treated as a single sample.  Rejects empty, non-finite
    and higher-dimensional input.
    """
    X = np.asarray(X)
    if X.dtype.kind not in "biufc":
        raise DomainError(f"{name} must be numeric, got dtype {X.dtype}")
    X = X.astype(complex)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise DomainError(f"{name} must be 1-D or 2-D (samples x radii), got shape {X.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise DomainError(f"{name} is empty")
    if X.shape[1] - 1 < ensure_min_radius:
        raise DomainError(f"{name} needs radius >= {ensure_min_radius}, got {X.shape[1] - 1}")
    if not np.all(np.isfinite(X)):
        raise DomainError(f"{name} contains NaN or infinite values")
    return X


def check_width(X, width, name="X"):
    if X.shape[1] != width:
        raise DomainError(f"{name} has {X.shape[1]} columns, the estimator was fitted on {width}")
    return X


def check_times(t, name="t"):
    t = np.asarray(t, dtype=float).ravel()
    if t.size == 0 or not np.all(np.isfinite(t)):
        raise DomainError(f"{name} must be a nonempty finite array")
    return t
