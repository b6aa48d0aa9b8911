"""Closed forms for the quadratic mean-field model.

With ``V(x) = x^T A x / 2`` and ``W(x) = lam ||x||^2 / 2`` the N-particle
stationary law is ``N(0, Sigma_1)`` with

    Sigma_1 = (sigma^2 / 2) (I_N (x) A + lam / (N - 1) C (x) I_d)^{-1},
    C = N I_N - 1 1^T,

and the mean-field law is ``N(0, (sigma^2 / 2) (A + lam I)^{-1})``. The
dense inverse is the reference; :func:`kl_marginal_spectral` is a fast
route that must agree with it.

Spectral KL. In an eigenbasis of ``A`` with eigenvalue ``a`` write
``eps = lam / (N - 1)`` and ``D = a + lam N / (N - 1)``. The precision
``D I_N - eps 1 1^T`` has inverse ``I/D + eps/(D a) 1 1^T``, so
``I - Sigma_2k^{-1} Sigma_1k`` restricted to that mode is
``(eps/D) I_k - eps (a + lam)/(D a) 1_k 1_k^T``, with eigenvalues
``eps/D - k eps (a + lam)/(D a)`` (once) and ``eps/D`` (k - 1 times).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_int, check_positive, check_spd
from .exceptions import DomainError

__all__ = [
    "GaussianSpec",
    "GaussianDist",
    "interaction_precision",
    "stationary_cov_full",
    "mean_field_cov",
    "marginals",
    "kl_gaussian",
    "kl_marginal_dense",
    "kl_marginal_spectral",
    "w2_gaussian",
    "w2sq_marginal",
    "lmc_stationary_cov",
]


@dataclass(frozen=True)
class GaussianSpec:
    A: np.ndarray
    lam: float
    sigma: float
    N: int
    k: int = 1

    def __post_init__(self):
        object.__setattr__(self, "A", check_spd(self.A))
        object.__setattr__(self, "lam", check_positive(self.lam, "lam", strict=False))
        object.__setattr__(self, "sigma", check_positive(self.sigma, "sigma"))
        N = check_int(self.N, "N", minimum=2)
        k = check_int(self.k, "k", minimum=1)
        if k > N:
            raise ValueError(f"k = {k} exceeds N = {N}")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "k", k)

    @property
    def d(self):
        return self.A.shape[0]

    def with_(self, **changes):
        kw = dict(A=self.A, lam=self.lam, sigma=self.sigma, N=self.N, k=self.k)
        kw.update(changes)
        return GaussianSpec(**kw)

    def pairwise_model(self):
        from .model import make_gaussian_pairwise

        return make_gaussian_pairwise(self.A, self.lam, self.sigma)


@dataclass(frozen=True)
class GaussianDist:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"cov shape {cov.shape} does not match mean size {mean.size}")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(cov))):
            raise ValueError("cov is not symmetric")
        cov = 0.5 * (cov + cov.T)
        if np.linalg.eigvalsh(cov)[0] < -1e-12:
            raise ValueError("cov is not positive semidefinite")
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", mean)

    @property
    def dim(self):
        return self.mean.size

    @classmethod
    def centered(cls, cov):
        cov = np.atleast_2d(cov)
        return cls(np.zeros(cov.shape[0]), cov)


def interaction_precision(spec):
    """``H = I_N (x) A + lam/(N-1) C (x) I_d``; the pairwise drift is ``-H x``."""
    N, d = spec.N, spec.d
    C = N * np.eye(N) - np.ones((N, N))
    return np.kron(np.eye(N), spec.A) + spec.lam / (N - 1) * np.kron(C, np.eye(d))


def stationary_cov_full(spec):
    """Dense ``dN x dN`` covariance of the N-particle stationary law."""
    H = interaction_precision(spec)
    cov = 0.5 * spec.sigma ** 2 * np.linalg.solve(H, np.eye(H.shape[0]))
    if not np.all(np.isfinite(cov)):
        raise FloatingPointError("singular interaction precision")
    return 0.5 * (cov + cov.T)


def mean_field_cov(spec):
    """``d x d`` covariance ``(sigma^2/2)(A + lam I)^{-1}`` of the mean-field law."""
    M = spec.A + spec.lam * np.eye(spec.d)
    cov = 0.5 * spec.sigma ** 2 * np.linalg.inv(M)
    return 0.5 * (cov + cov.T)


def marginals(spec):
    """``(mu^{1:k}, pi^{(x)k})`` as :class:`GaussianDist` of dimension ``k d``."""
    kd = spec.k * spec.d
    sigma1 = stationary_cov_full(spec)[:kd, :kd]
    sigma2 = np.kron(np.eye(spec.k), mean_field_cov(spec))
    return GaussianDist.centered(sigma1), GaussianDist.centered(sigma2)


def kl_gaussian(p, q):
    """``KL(p || q)`` between Gaussians."""
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    try:
        cq = np.linalg.cholesky(q.cov)
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError("q.cov is not invertible") from None
    # R = q^{-1} p through triangular solves
    sol = np.linalg.solve(cq, p.cov)
    R = np.linalg.solve(cq.T, sol)
    sign, logdet_r = np.linalg.slogdet(R)
    if sign <= 0:
        raise np.linalg.LinAlgError("p.cov is singular")
    diff = q.mean - p.mean
    maha = float(diff @ np.linalg.solve(q.cov, diff))
    return 0.5 * (-logdet_r - p.dim + np.trace(R) + maha)


def kl_marginal_dense(spec):
    p, q = marginals(spec)
    return kl_gaussian(p, q)


def kl_marginal_spectral(spec):
    """``KL(mu^{1:k} || pi^{(x)k})`` from the eigenvalues of ``A`` in ``O(d^3 + d k)``."""
    a = np.linalg.eigvalsh(spec.A)
    N, k, lam = spec.N, spec.k, spec.lam
    eps = lam / (N - 1)
    D = a + lam * N / (N - 1)
    eta_top = eps / D - k * eps * (a + lam) / (D * a)
    eta_rest = eps / D
    if np.any(eta_top >= 1) or np.any(eta_rest >= 1):
        raise DomainError("spectral eigenvalue >= 1")
    total = np.sum(-np.log1p(-eta_top) - eta_top)
    total += (k - 1) * np.sum(-np.log1p(-eta_rest) - eta_rest)
    return 0.5 * float(total)


def _sym_sqrt(S):
    w, U = np.linalg.eigh(0.5 * (S + S.T))
    return (U * np.sqrt(np.clip(w, 0.0, None))) @ U.T


def w2_gaussian(p, q):
    """Bures-Wasserstein distance between Gaussians."""
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    rq = _sym_sqrt(q.cov)
    cross = _sym_sqrt(rq @ p.cov @ rq)
    val = float(np.sum((p.mean - q.mean) ** 2) + np.trace(p.cov + q.cov - 2.0 * cross))
    return float(np.sqrt(max(val, 0.0)))


def w2sq_marginal(spec):
    p, q = marginals(spec)
    return w2_gaussian(p, q) ** 2


def lmc_stationary_cov(spec, h):
    """Stationary covariance of ``X+ = X - h H X + sigma sqrt(h) xi``.

    Each eigenmode ``mu`` of ``H`` has variance ``sigma^2 / (mu (2 - h mu))``.
    """
    h = check_positive(h, "h")
    H = interaction_precision(spec)
    mu, U = np.linalg.eigh(H)
    if np.any(h * mu >= 2.0):
        raise DomainError(f"unstable step h = {h}: h * mu_max = {h * mu[-1]:g} >= 2")
    var = spec.sigma ** 2 / (mu * (2.0 - h * mu))
    cov = (U * var) @ U.T
    return 0.5 * (cov + cov.T)
