"""Input validation helpers used across modules."""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import ModelError


def check_particles(state, *, dim=None, min_particles=1, name="state"):
    """Return ``state`` as a float (N, d) array after shape and finiteness checks.

    Accepts a :class:`~mfsampling.model.ParticleState`, or anything
    ``np.asarray`` understands. 1-D inputs are read as N particles in d=1.
    """
    arr = getattr(state, "particles", state)
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be an (N, d) array, got shape {arr.shape}")
    n, d = arr.shape
    if n < min_particles:
        raise ModelError(f"{name} needs at least {min_particles} particles, got {n}")
    if d < 1:
        raise ValueError(f"{name} must have dimension >= 1")
    if dim is not None and d != dim:
        raise ValueError(f"{name} has dimension {d}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return arr


def check_spd(A, name="A"):
    """Symmetrize ``A`` and verify it is symmetric positive definite."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ModelError(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=1e-10, atol=1e-12):
        raise ModelError(f"{name} is not symmetric")
    A = 0.5 * (A + A.T)
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise ModelError(f"{name} is not positive definite") from None
    return A


def check_positive(value, name, *, strict=True, allow_none=False):
    if value is None:
        if allow_none:
            return None
        raise ValueError(f"{name} is required")
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return float(value)


def check_int(value, name, *, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def first_nonfinite_row(arr):
    """Index of the first row of ``arr`` with a non-finite entry, or None."""
    bad = ~np.isfinite(arr)
    if bad.ndim > 1:
        bad = bad.reshape(bad.shape[0], -1).any(axis=1)
    idx = np.flatnonzero(bad)
    return int(idx[0]) if idx.size else None
