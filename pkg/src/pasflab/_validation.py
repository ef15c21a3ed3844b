"""Input validation shared by the estimator API.

sklearn's ``check_array`` rejects complex input, so these are hand-rolled.
"""

from __future__ import annotations

import numpy as np


def check_vectors(X, dim=None, field="real", name="X") -> np.ndarray:
    """Return ``X`` as a finite 2-D array of row vectors in the given field."""
    X = np.asarray(X)
    if X.ndim == 1:
        raise ValueError(f"{name} must be 2-D (n_vectors, dim); reshape a single vector with X[None, :]")
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"{name} has {X.shape[1]} features, expected {dim}")
    if not np.issubdtype(X.dtype, np.number):
        raise TypeError(f"{name} must be numeric, got dtype {X.dtype}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or infinity")
    if field == "complex":
        return X.astype(np.complex128)
    if np.iscomplexobj(X):
        if np.any(X.imag != 0):
            raise ValueError(f"{name} is complex but field='real'")
        X = X.real
    return X.astype(np.float64)


def check_exponent(p) -> float:
    p = float(p)
    if not np.isfinite(p) or p <= 1.0:
        raise ValueError(f"p must satisfy 1 < p < inf, got {p}")
    return p
