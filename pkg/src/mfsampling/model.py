"""Pairwise and general mean-field models and their N-particle Gibbs measures.

Potentials and gradients are plain callables that must broadcast over
leading axes: ``V(x)`` maps an ``(..., d)`` array to ``(...)`` and
``grad_V(x)`` maps it to ``(..., d)``; the same holds for ``W``. This lets
the pairwise sums be evaluated on the full ``(N, N, d)`` difference tensor
in one call, with reductions in a fixed index order.

Two empirical-average conventions coexist on purpose. The pairwise
drift averages the interaction over the ``N - 1`` other particles, while
a general functional is evaluated at the full empirical measure,
self-interaction included. :func:`pairwise_as_general` bridges the two
and is exact only as ``N -> infinity``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._validation import check_particles, check_positive, check_spd, first_nonfinite_row
from .exceptions import EvaluationError, ModelError
from .theory import RegularityParams, finite_particle_regularity

__all__ = [
    "ParticleState",
    "PairwiseModel",
    "GeneralModel",
    "pairwise_drift",
    "pairwise_log_density",
    "pairwise_score",
    "general_drift",
    "general_log_density",
    "general_score",
    "make_gaussian_pairwise",
    "make_double_well",
    "pairwise_as_general",
    "finite_difference_gradient",
]


@dataclass(frozen=True)
class ParticleState:
    """An ``(N, d)`` particle configuration; also read as its empirical measure."""

    particles: np.ndarray

    def __post_init__(self):
        arr = check_particles(self.particles)
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "particles", arr)

    @property
    def n_particles(self):
        return self.particles.shape[0]

    @property
    def dim(self):
        return self.particles.shape[1]

    def permute(self, perm):
        return ParticleState(self.particles[np.asarray(perm)])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.particles, dtype=dtype)


@dataclass
class PairwiseModel:
    """Confinement ``V`` plus even interaction ``W`` at diffusion scale ``sigma``.

    Regularity constants are declared metadata; they are never estimated
    from the callables.
    """

    V: Callable
    grad_V: Callable
    W: Callable
    grad_W: Callable
    sigma: float
    alpha_V: float | None = None
    beta_V: float | None = None
    alpha_W: float | None = None
    beta_W: float | None = None
    osc_V1: float | None = None
    osc_W1: float | None = None
    name: str = "pairwise"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sigma = check_positive(self.sigma, "sigma", strict=False)

    def regularity(self):
        return RegularityParams(sigma=self.sigma, alpha_V=self.alpha_V, beta_V=self.beta_V,
                                alpha_W=self.alpha_W, beta_W=self.beta_W,
                                osc_V1=self.osc_V1, osc_W1=self.osc_W1)

    def drift(self, x):
        return pairwise_drift(self, x)

    def log_density(self, x):
        return pairwise_log_density(self, x)

    def score(self, x):
        return pairwise_score(self, x)

    def drift_lipschitz(self, N):
        """Lipschitz bound for the drift map, or None when undeclared."""
        if self.beta_V is None or self.beta_W is None:
            return None
        return self.beta_V + N / (N - 1) * self.beta_W

    def log_smoothness(self, N):
        """Smoothness of ``-log mu^{1:N}``, or None when undeclared."""
        if self.sigma == 0:
            return None
        return finite_particle_regularity(self.regularity(), N)[1]


@dataclass
class GeneralModel:
    """Functional ``F0`` on empirical measures with weight decay ``lam``.

    ``F0(particles)`` evaluates the functional at the empirical measure of
    an ``(N, d)`` array. ``w2_grad(particles, points)`` returns the
    Wasserstein gradient of ``F0`` at that empirical measure, evaluated at
    each row of ``points`` (shape ``(M, d)``).
    """

    F0: Callable
    w2_grad: Callable
    lam: float
    sigma: float
    beta: float | None = None
    B: float | None = None
    name: str = "general"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lam = check_positive(self.lam, "lam", strict=False)
        self.sigma = check_positive(self.sigma, "sigma", strict=False)

    def regularity(self):
        return RegularityParams(sigma=self.sigma, beta=self.beta, B=self.B, lam=self.lam)

    def drift(self, x):
        return general_drift(self, x)

    def log_density(self, x):
        return general_log_density(self, x)

    def score(self, x):
        return general_score(self, x)

    def drift_lipschitz(self, N):
        # rows of the Wasserstein gradient move by beta (||dx^i|| + W1) and
        # W1 <= ||dx|| / sqrt(N), so the drift is (2 beta + lam)-Lipschitz
        if self.beta is None:
            return None
        return 2.0 * self.beta + self.lam

    def log_smoothness(self, N):
        lip = self.drift_lipschitz(N)
        if lip is None or self.sigma == 0:
            return None
        return 2.0 / self.sigma ** 2 * lip


# -- pairwise ---------------------------------------------------------------

def _pair_differences(x):
    return x[:, None, :] - x[None, :, :]


def pairwise_drift(model, state):
    """Drift ``-(grad V(x^i) + 1/(N-1) sum_{j != i} grad W(x^i - x^j))`` per particle."""
    x = check_particles(state, min_particles=1)
    n = x.shape[0]
    if n < 2:
        raise ModelError("pairwise models need N >= 2 particles")
    gv = np.asarray(model.grad_V(x), dtype=float)
    gw = np.asarray(model.grad_W(_pair_differences(x)), dtype=float)
    gw = gw.copy()
    idx = np.arange(n)
    gw[idx, idx] = 0.0
    out = -(gv + gw.sum(axis=1) / (n - 1))
    bad = first_nonfinite_row(out)
    if bad is not None:
        raise EvaluationError(f"non-finite drift at particle {bad}", particle=bad)
    return out


def pairwise_log_density(model, state):
    """Unnormalized ``log mu^{1:N}`` of the pairwise model."""
    x = check_particles(state)
    n = x.shape[0]
    if n < 2:
        raise ModelError("pairwise models need N >= 2 particles")
    if model.sigma == 0:
        raise ModelError("the Gibbs measure is undefined at sigma = 0")
    s2 = model.sigma ** 2
    v = np.asarray(model.V(x), dtype=float)
    w = np.asarray(model.W(_pair_differences(x)), dtype=float).copy()
    idx = np.arange(n)
    w[idx, idx] = 0.0
    value = -2.0 / s2 * v.sum() - w.sum() / (s2 * (n - 1))
    if not np.isfinite(value):
        raise EvaluationError("non-finite potential value")
    return float(value)


def pairwise_score(model, state):
    """``grad log mu^{1:N}``, equal to ``(2 / sigma^2)`` times the drift."""
    if model.sigma == 0:
        raise ModelError("the score is undefined at sigma = 0")
    return 2.0 / model.sigma ** 2 * pairwise_drift(model, state)


# -- general ----------------------------------------------------------------

def general_drift(model, state):
    """Drift ``-grad_W2 F0(rho, x^i) - lam x^i`` per particle."""
    x = check_particles(state)
    g = np.asarray(model.w2_grad(x, x), dtype=float)
    if g.shape != x.shape:
        raise ModelError(f"w2_grad returned shape {g.shape}, expected {x.shape}")
    out = -g - model.lam * x
    bad = first_nonfinite_row(out)
    if bad is not None:
        raise EvaluationError(f"non-finite functional gradient at particle {bad}", particle=bad)
    return out


def general_log_density(model, state):
    """Unnormalized ``-(2N/sigma^2) F0(rho) - (lam/sigma^2) ||x||^2``."""
    x = check_particles(state)
    if model.sigma == 0:
        raise ModelError("the Gibbs measure is undefined at sigma = 0")
    s2 = model.sigma ** 2
    f0 = float(model.F0(x))
    if not np.isfinite(f0):
        raise EvaluationError("non-finite functional value")
    return -2.0 * x.shape[0] / s2 * f0 - model.lam / s2 * float(np.sum(x * x))


def general_score(model, state):
    if model.sigma == 0:
        raise ModelError("the score is undefined at sigma = 0")
    return 2.0 / model.sigma ** 2 * general_drift(model, state)


def pairwise_as_general(model):
    """Recast a pairwise model as ``F0(mu) = int V dmu + 1/2 iint W(x-y) dmu dmu``.

    The factor 1/2 makes the Wasserstein gradient ``grad V + int grad W(x-.) dmu``
    match the pairwise drift up to the ``1/N`` versus ``1/(N-1)``
    normalization of the interaction average.
    """
    def F0(x):
        diffs = _pair_differences(x)
        n = x.shape[0]
        return float(np.mean(model.V(x)) + 0.5 * np.sum(model.W(diffs)) / n ** 2)

    def w2_grad(x, points):
        diffs = points[:, None, :] - x[None, :, :]
        return np.asarray(model.grad_V(points)) + np.mean(model.grad_W(diffs), axis=1)

    beta = None
    if model.beta_V is not None and model.beta_W is not None:
        beta = model.beta_V + model.beta_W
    return GeneralModel(F0=F0, w2_grad=w2_grad, lam=0.0, sigma=model.sigma, beta=beta,
                        name=f"{model.name}-as-functional")


# -- built-in families ------------------------------------------------------

def make_gaussian_pairwise(A, lam, sigma):
    """Quadratic model ``V(x) = x^T A x / 2``, ``W(x) = lam ||x||^2 / 2``.

    Regularity constants are exact: ``alpha_V``, ``beta_V`` are the extreme
    eigenvalues of ``A`` and ``alpha_W = beta_W = lam``.
    """
    A = check_spd(A)
    lam = check_positive(lam, "lam", strict=False)
    eig = np.linalg.eigvalsh(A)

    def V(x):
        return 0.5 * np.einsum("...i,ij,...j->...", x, A, x)

    def grad_V(x):
        return x @ A

    def W(z):
        return 0.5 * lam * np.sum(z * z, axis=-1)

    def grad_W(z):
        return lam * z

    return PairwiseModel(V=V, grad_V=grad_V, W=W, grad_W=grad_W, sigma=sigma,
                         alpha_V=float(eig[0]), beta_V=float(eig[-1]),
                         alpha_W=lam, beta_W=lam, name="gaussian",
                         meta={"family": "gaussian", "A": A, "lam": lam})


def make_double_well(lam, sigma, shift=0.0, dim=1):
    """Coordinatewise double well ``V(x) = sum(x^4/4 - x^2/2) + shift`` with quadratic interaction.

    ``V`` has Hessian bounded below by -1 but is not globally smooth, so
    ``beta_V`` stays undeclared.
    """
    lam = check_positive(lam, "lam", strict=False)

    def V(x):
        return np.sum(0.25 * x ** 4 - 0.5 * x ** 2, axis=-1) + shift

    def grad_V(x):
        return x ** 3 - x

    def W(z):
        return 0.5 * lam * np.sum(z * z, axis=-1)

    def grad_W(z):
        return lam * z

    return PairwiseModel(V=V, grad_V=grad_V, W=W, grad_W=grad_W, sigma=sigma,
                         alpha_V=-1.0, alpha_W=lam, beta_W=lam, name="double-well",
                         meta={"family": "double-well", "lam": lam, "shift": shift, "dim": dim})


def finite_difference_gradient(f, x, step=1e-5):
    """Central differences of scalar ``f`` at array ``x`` with step ``step * (1 + ||x||_inf)``."""
    x = np.array(x, dtype=float)
    h = step * (1.0 + np.max(np.abs(x)))
    grad = np.empty_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad
