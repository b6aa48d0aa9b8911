"""Estimators that connect sampler output to the closed forms and bounds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import linregress

MAX_ASSIGNMENT_SIZE = 2048


@dataclass(frozen=True)
class MomentSummary:
    """Sample mean and covariance with batch-means standard errors."""

    mean: np.ndarray
    cov: np.ndarray
    se_mean: np.ndarray
    se_cov: np.ndarray
    n_samples: int
    n_batches: int

    @property
    def var(self):
        return np.diag(self.cov)

    @property
    def se_var(self):
        return np.diag(self.se_cov)


def empirical_moments(samples, n_batches=32):
    """Mean/covariance of ``samples`` (shape ``(n, p)``) and their batch-means errors.

    The chain is cut into ``n_batches`` contiguous batches (a remainder at
    the start is dropped for the error estimate only). Errors on the
    covariance use batch averages of the centered outer products.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    X = X.reshape(X.shape[0], -1)
    n = X.shape[0]
    if n_batches < 8:
        raise ValueError("n_batches must be >= 8")
    if n < n_batches:
        raise ValueError(f"too few samples: {n} < n_batches = {n_batches}")
    mean = X.mean(axis=0)
    Z = X - mean
    cov = Z.T @ Z / n
    size = n // n_batches
    Zb = Z[n - size * n_batches:].reshape(n_batches, size, -1)
    batch_means = Zb.mean(axis=1)
    batch_covs = np.einsum("bsi,bsj->bij", Zb, Zb) / size
    root = np.sqrt(n_batches)
    se_mean = batch_means.std(axis=0, ddof=1) / root
    se_cov = batch_covs.std(axis=0, ddof=1) / root
    return MomentSummary(mean, 0.5 * (cov + cov.T), se_mean, se_cov, n, n_batches)


def _as_cloud(cloud):
    arr = np.asarray(cloud, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr.reshape(arr.shape[0], -1)


def empirical_w2sq(cloud_a, cloud_b):
    """Squared W2 distance between two equal-size point clouds (uniform weights).

    Solved exactly as an assignment problem; clouds larger than
    :data:`MAX_ASSIGNMENT_SIZE` must be subsampled by the caller.
    """
    a, b = _as_cloud(cloud_a), _as_cloud(cloud_b)
    if a.shape != b.shape:
        raise ValueError(f"cloud shapes differ: {a.shape} vs {b.shape}")
    m = a.shape[0]
    if m > MAX_ASSIGNMENT_SIZE:
        raise ValueError(f"clouds of size {m} exceed {MAX_ASSIGNMENT_SIZE}; subsample first")
    cost = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / m)


def extract_marginal(samples, k, relabel=False, rng=None):
    """First-``k``-particle blocks of ``(n, N, d)`` samples, flattened to ``(n, k d)``.

    With ``relabel=True`` each sample's particles are randomly permuted
    before extraction, which leaves the law unchanged for an exchangeable
    target.
    """
    S = np.asarray(samples, dtype=float)
    if S.ndim == 2:
        S = S[:, :, None]
    n, N, d = S.shape
    if not 1 <= k <= N:
        raise ValueError(f"k must lie in [1, {N}], got {k}")
    if relabel:
        rng = np.random.default_rng(rng)
        perms = np.argsort(rng.random((n, N)), axis=1)[:, :k]
        S = np.take_along_axis(S, perms[:, :, None], axis=1)
    else:
        S = S[:, :k]
    return S.reshape(n, k * d)


def pooled_particle_marginal(samples):
    """Stack all particles of ``(n, N, d)`` samples into ``(n N, d)`` one-particle draws."""
    S = np.asarray(samples, dtype=float)
    if S.ndim == 2:
        S = S[:, :, None]
    return S.reshape(-1, S.shape[-1])


class Fit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def scaling_exponent(xs, ys):
    """Least-squares fit of ``log y = slope log x + intercept``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.size < 3:
        raise ValueError("need at least 3 paired points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("scaling_exponent needs positive inputs")
    res = linregress(np.log(xs), np.log(ys))
    return Fit(float(res.slope), float(res.intercept), float(res.rvalue ** 2))


class BoundReport(NamedTuple):
    ratio: float
    satisfied: bool


def bound_report(measured, bound):
    if not bound > 0:
        raise ValueError("bound must be > 0")
    ratio = measured / bound
    return BoundReport(float(ratio), bool(ratio <= 1.0))
