"""Log-concave samplers run on the N-particle Gibbs measure.

All schemes work in the time units of the particle SDE
``dX = b(X) dt + sigma dB`` where ``b`` is the model drift, so that
``grad log mu^{1:N} = (2 / sigma^2) b``. The underdamped schemes use

    dX = V dt,   dV = (-gamma V + b(X)) dt + sigma sqrt(gamma) dB,

whose stationary law is ``mu^{1:N}`` times ``N(0, sigma^2/2 I)`` in the
velocity. See ``docs/randomized_midpoint.md`` for the Gaussian increments.

Oracle accounting (``n_gradient`` / ``n_density`` in :class:`ChainOutput`):

========================  ===========================  ======================
scheme                    drift evaluations            log-density evaluations
========================  ===========================  ======================
LMC                       n_iters                      0
MALA                      n_iters + 1                  n_iters + 1
ULMC                      n_iters + 1                  0
ULMC, randomized midpoint 2 n_iters                    0
proximal, MALA inner      n_iters (inner_iters + 1)    n_iters (inner_iters + 1)
proximal, ULMC inner      n_iters (inner_iters + 1)    0
========================  ===========================  ======================
"""

from __future__ import annotations

import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._validation import check_int, check_positive
from .exceptions import ConfigurationError, DivergenceError, EvaluationError

__all__ = [
    "SamplerConfig",
    "ChainOutput",
    "make_rng",
    "RNG_ALGORITHM",
    "run_lmc",
    "run_mala",
    "run_ulmc",
    "run_ulmc_rm",
    "run_proximal",
    "run_sampler",
    "sample_mean_field",
    "mala_log_ratio",
    "default_friction",
    "default_prox_step",
    "underdamped_increment_cov",
    "midpoint_increment_cov",
    "SAMPLERS",
]

DIVERGENCE_THRESHOLD = 1e12
ZERO_ACCEPTANCE_WINDOW = 10_000
RNG_ALGORITHM = f"numpy.random.Philox(4x64-10) seeded via SeedSequence; numpy {np.__version__}"


@dataclass(frozen=True)
class SamplerConfig:
    """Discretization and bookkeeping parameters shared by all samplers.

    ``prox_step`` is the variance of the proximal Gaussian step (log-density
    units, not time); ``inner_iters`` counts inner sampler steps per
    proximal iteration.
    """

    step_size: float
    n_iters: int
    burn_in: int = 0
    thinning: int = 1
    friction: float | None = None
    prox_step: float | None = None
    inner_iters: int | None = None
    seed: int = 0
    k_out: int | None = None

    def __post_init__(self):
        try:
            check_positive(self.step_size, "step_size")
            check_int(self.n_iters, "n_iters", minimum=1)
            check_int(self.burn_in, "burn_in", minimum=0)
            check_int(self.thinning, "thinning", minimum=1)
            check_int(self.seed, "seed", minimum=0)
            check_positive(self.friction, "friction", allow_none=True)
            check_positive(self.prox_step, "prox_step", allow_none=True)
            if self.inner_iters is not None:
                check_int(self.inner_iters, "inner_iters", minimum=1)
            if self.k_out is not None:
                check_int(self.k_out, "k_out", minimum=1)
        except ValueError as err:
            raise ConfigurationError(str(err)) from None
        if self.burn_in >= self.n_iters:
            raise ConfigurationError(f"burn_in = {self.burn_in} must be < n_iters = {self.n_iters}")
        if self.seed >= 2 ** 64:
            raise ConfigurationError("seed must fit in 64 bits")

    @property
    def n_keep(self):
        return len(range(self.burn_in, self.n_iters, self.thinning))


@dataclass
class ChainOutput:
    """Retained states of one chain, shape ``(n_keep, N, d)``, plus statistics."""

    samples: np.ndarray
    acceptance_rate: float | None
    wall_time: float
    n_gradient: int
    n_density: int
    final_state: np.ndarray
    velocities: np.ndarray | None = None

    @property
    def oracle_calls(self):
        return self.n_gradient + self.n_density


def make_rng(seed, chain_index=None):
    """Counter-based generator; chains get sub-seeds hashed from ``(seed, chain_index)``."""
    if chain_index is None:
        ss = np.random.SeedSequence(seed)
    else:
        ss = np.random.SeedSequence(seed, spawn_key=(int(chain_index),))
    return np.random.Generator(np.random.Philox(ss))


# -- helpers ----------------------------------------------------------------

def _initial_state(init, rng):
    if isinstance(init, tuple) and len(init) == 2 and all(isinstance(v, int) for v in init):
        return rng.standard_normal(init)
    x = np.array(init, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or not np.all(np.isfinite(x)):
        raise ConfigurationError("init must be a finite (N, d) array or an (N, d) shape tuple")
    return x


class _Recorder:
    def __init__(self, config, shape, with_velocity=False):
        self.config = config
        self.samples = np.empty((config.n_keep,) + shape)
        self.velocities = np.empty((config.n_keep,) + shape) if with_velocity else None
        self.pos = 0

    def __call__(self, i, x, v=None):
        c = self.config
        if i >= c.burn_in and (i - c.burn_in) % c.thinning == 0:
            self.samples[self.pos] = x
            if self.velocities is not None:
                self.velocities[self.pos] = v
            self.pos += 1


def _check_finite(i, *arrays):
    for a in arrays:
        if not np.all(np.abs(a) <= DIVERGENCE_THRESHOLD):
            raise DivergenceError(f"chain diverged at iteration {i}", iteration=i)


def _call(i, fn, x):
    try:
        return fn(x)
    except EvaluationError as err:
        raise DivergenceError(f"chain diverged at iteration {i}: {err}", iteration=i) from err


def _require_sigma(model, scheme):
    if model.sigma <= 0:
        raise ConfigurationError(f"{scheme} needs sigma > 0 (the target density is undefined)")


def default_friction(model, N):
    """``sqrt(2 L)`` with ``L`` the declared drift Lipschitz constant, else 1."""
    lip = model.drift_lipschitz(N)
    return math.sqrt(2.0 * lip) if lip else 1.0


def default_prox_step(model, N):
    """``1 / (2 L)`` for ``L`` the smoothness of ``-log mu^{1:N}``, or None if undeclared."""
    L = model.log_smoothness(N)
    return 0.5 / L if L else None


# -- Gaussian increments of the underdamped dynamics ------------------------

def _em1(z):
    """1 - exp(-z)."""
    return -math.expm1(-z)


def _g1(z):
    """z - 1 + exp(-z), accurate for small z."""
    if z < 1e-2:
        return z * z * (1 / 2 - z * (1 / 6 - z * (1 / 24 - z * (1 / 120 - z * (1 / 720 - z / 5040)))))
    return z + math.expm1(-z)


def _phi(gamma, t):
    """(1 - exp(-gamma t)) / gamma."""
    return _em1(gamma * t) / gamma


def _xx(gamma, t):
    z = gamma * t
    return (_g1(z) - 0.5 * _em1(z) ** 2) / gamma ** 2


def underdamped_increment_cov(gamma, h):
    """Covariance of the (position, velocity) noise over one step, per unit ``sigma^2``."""
    z = gamma * h
    xx = _xx(gamma, h)
    xv = _em1(z) ** 2 / (2.0 * gamma)
    vv = 0.5 * _em1(2.0 * z)
    return np.array([[xx, xv], [xv, vv]])


def midpoint_increment_cov(gamma, h, a):
    """Joint covariance of (midpoint position, position, velocity) noise, per unit ``sigma^2``.

    ``a`` in ``[0, h]`` is the midpoint time.
    """
    za = gamma * a
    decay = math.exp(-gamma * (h - a))
    mm = _xx(gamma, a)
    mx = (_g1(za) - 0.5 * decay * _em1(za) ** 2) / gamma ** 2
    mv = decay * _em1(za) ** 2 / (2.0 * gamma)
    S = np.empty((3, 3))
    S[0, 0] = mm
    S[0, 1] = S[1, 0] = mx
    S[0, 2] = S[2, 0] = mv
    S[1:, 1:] = underdamped_increment_cov(gamma, h)
    return S


def _factor(S):
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        w, U = np.linalg.eigh(S)
        return U * np.sqrt(np.clip(w, 0.0, None))


# -- step kernels -------------------------------------------------------------

def mala_log_ratio(model, x, y, h):
    """Log Metropolis-Hastings ratio for proposing ``y`` from ``x`` with step ``h``."""
    s2 = model.sigma ** 2
    bx, by = model.drift(x), model.drift(y)
    fwd = np.sum((y - x - h * bx) ** 2)
    bwd = np.sum((x - y - h * by) ** 2)
    return model.log_density(y) - model.log_density(x) + (fwd - bwd) / (2.0 * s2 * h)


class _MalaKernel:
    def __init__(self, target, h, rng):
        self.target, self.h, self.rng = target, h, rng
        self.scale = target.sigma * math.sqrt(h)
        self.two_s2h = 2.0 * target.sigma ** 2 * h
        self.accepted = 0
        self.n_grad = self.n_dens = 0
        self.reject_run = 0

    def start(self, i, x):
        self.x = x
        self.logp = _call(i, self.target.log_density, x)
        self.b = _call(i, self.target.drift, x)
        self.n_grad += 1
        self.n_dens += 1

    def step(self, i):
        x, h = self.x, self.h
        xi = self.rng.standard_normal(x.shape)
        y = x + h * self.b + self.scale * xi
        _check_finite(i, y)
        logp_y = _call(i, self.target.log_density, y)
        b_y = _call(i, self.target.drift, y)
        self.n_grad += 1
        self.n_dens += 1
        # forward residual is scale * xi by construction
        log_ratio = (logp_y - self.logp
                     + 0.5 * float(np.sum(xi * xi))
                     - float(np.sum((x - y - h * b_y) ** 2)) / self.two_s2h)
        if math.log(self.rng.random()) < log_ratio:
            self.x, self.logp, self.b = y, logp_y, b_y
            self.accepted += 1
            self.reject_run = 0
        else:
            self.reject_run += 1
            if self.reject_run == ZERO_ACCEPTANCE_WINDOW:
                warnings.warn(f"MALA rejected {ZERO_ACCEPTANCE_WINDOW} consecutive proposals; "
                              "step size is likely too large", RuntimeWarning, stacklevel=3)
        return self.x


class _UnderdampedKernel:
    """Exponential integrator with the drift frozen over each step."""

    def __init__(self, target, h, gamma, rng):
        self.target, self.h, self.gamma, self.rng = target, h, gamma, rng
        self.c_v = _phi(gamma, h)
        self.c_b = _g1(gamma * h) / gamma ** 2
        self.decay = math.exp(-gamma * h)
        self.L = target.sigma * _factor(underdamped_increment_cov(gamma, h))
        self.n_grad = 0

    def start(self, i, x, v):
        self.x, self.v = x, v
        self.b = _call(i, self.target.drift, x)
        self.n_grad += 1

    def step(self, i):
        xi = self.rng.standard_normal((2,) + self.x.shape)
        L = self.L
        x = self.x + self.c_v * self.v + self.c_b * self.b + L[0, 0] * xi[0]
        v = self.decay * self.v + self.c_v * self.b + L[1, 0] * xi[0] + L[1, 1] * xi[1]
        _check_finite(i, x, v)
        self.x, self.v = x, v
        self.b = _call(i, self.target.drift, x)
        self.n_grad += 1
        return x


class _MidpointKernel:
    """Randomized midpoint discretization of the underdamped dynamics."""

    def __init__(self, target, h, gamma, rng):
        self.target, self.h, self.gamma, self.rng = target, h, gamma, rng
        self.c_v = _phi(gamma, h)
        self.decay = math.exp(-gamma * h)
        self.n_grad = 0

    def start(self, i, x, v):
        self.x, self.v = x, v

    def step(self, i):
        h, g, rng = self.h, self.gamma, self.rng
        a = h * rng.random()
        L = self.target.sigma * _factor(midpoint_increment_cov(g, h, a))
        xi = rng.standard_normal((3,) + self.x.shape)
        noise = np.tensordot(L, xi, axes=1)
        x, v = self.x, self.v
        b0 = _call(i, self.target.drift, x)
        x_mid = x + _phi(g, a) * v + _g1(g * a) / g ** 2 * b0 + noise[0]
        _check_finite(i, x_mid)
        b_mid = _call(i, self.target.drift, x_mid)
        self.n_grad += 2
        x_new = x + self.c_v * v + h * _phi(g, h - a) * b_mid + noise[1]
        v_new = self.decay * v + h * math.exp(-g * (h - a)) * b_mid + noise[2]
        _check_finite(i, x_new, v_new)
        self.x, self.v = x_new, v_new
        return x_new


# -- chain drivers ------------------------------------------------------------

def _warn_step(model, h, N):
    lip = model.drift_lipschitz(N)
    if lip and h > 1.0 / lip:
        warnings.warn(f"step size {h:g} exceeds 1/L = {1.0 / lip:g} for the declared "
                      "drift Lipschitz constant; the discretization may be unstable",
                      RuntimeWarning, stacklevel=3)


def run_lmc(model, config, init, *, chain_index=None):
    """Euler-Maruyama (unadjusted Langevin) chain ``X + h b(X) + sigma sqrt(h) xi``."""
    t0 = time.perf_counter()
    rng = make_rng(config.seed, chain_index)
    x = _initial_state(init, rng)
    h = config.step_size
    _warn_step(model, h, x.shape[0])
    scale = model.sigma * math.sqrt(h)
    rec = _Recorder(config, x.shape)
    drift = model.drift
    for i in range(config.n_iters):
        b = _call(i, drift, x)
        x = x + h * b + scale * rng.standard_normal(x.shape)
        _check_finite(i, x)
        rec(i, x)
    return ChainOutput(rec.samples, None, time.perf_counter() - t0,
                       n_gradient=config.n_iters, n_density=0, final_state=x)


def run_mala(model, config, init, *, chain_index=None):
    """Metropolis-adjusted Langevin chain reversible for ``mu^{1:N}``."""
    _require_sigma(model, "MALA")
    t0 = time.perf_counter()
    rng = make_rng(config.seed, chain_index)
    x = _initial_state(init, rng)
    kernel = _MalaKernel(model, config.step_size, rng)
    kernel.start(0, x)
    rec = _Recorder(config, x.shape)
    for i in range(config.n_iters):
        x = kernel.step(i)
        rec(i, x)
    return ChainOutput(rec.samples, kernel.accepted / config.n_iters, time.perf_counter() - t0,
                       n_gradient=kernel.n_grad, n_density=kernel.n_dens, final_state=x)


def _underdamped(kernel_cls, model, config, init, init_velocity, chain_index):
    t0 = time.perf_counter()
    rng = make_rng(config.seed, chain_index)
    x = _initial_state(init, rng)
    N = x.shape[0]
    gamma = config.friction or default_friction(model, N)
    if init_velocity is None:
        v = math.sqrt(0.5) * model.sigma * rng.standard_normal(x.shape)
    else:
        v = np.array(init_velocity, dtype=float).reshape(x.shape)
    kernel = kernel_cls(model, config.step_size, gamma, rng)
    kernel.start(0, x, v)
    rec = _Recorder(config, x.shape, with_velocity=True)
    for i in range(config.n_iters):
        x = kernel.step(i)
        rec(i, x, kernel.v)
    return ChainOutput(rec.samples, None, time.perf_counter() - t0,
                       n_gradient=kernel.n_grad, n_density=0, final_state=x,
                       velocities=rec.velocities)


def run_ulmc(model, config, init, *, init_velocity=None, chain_index=None):
    """Underdamped Langevin with an exact Ornstein-Uhlenbeck step and frozen drift.

    Friction defaults to :func:`default_friction`; the initial velocity is
    drawn from its stationary law unless given.
    """
    return _underdamped(_UnderdampedKernel, model, config, init, init_velocity, chain_index)


def run_ulmc_rm(model, config, init, *, init_velocity=None, chain_index=None):
    """Underdamped Langevin with the randomized midpoint discretization."""
    return _underdamped(_MidpointKernel, model, config, init, init_velocity, chain_index)


class _RestrictedGaussian:
    """``mu^{1:N}(x) exp(-||x - y||^2 / (2 h))`` with the model's drift conventions."""

    def __init__(self, model, y, h):
        self.model, self.y, self.h = model, y, h
        self.sigma = model.sigma
        self.pull = 0.5 * model.sigma ** 2 / h

    def drift(self, x):
        return self.model.drift(x) - self.pull * (x - self.y)

    def log_density(self, x):
        return self.model.log_density(x) - float(np.sum((x - self.y) ** 2)) / (2.0 * self.h)


def run_proximal(model, config, init, inner="mala", *, chain_index=None):
    """Proximal sampler: ``y ~ N(x, h_prox I)``, then ``x`` from the restricted Gaussian oracle.

    The oracle is approximated by ``inner_iters`` steps of MALA or ULMC
    (step ``step_size``) started at ``y``.
    """
    if inner not in ("mala", "ulmc"):
        raise ConfigurationError(f"inner sampler must be 'mala' or 'ulmc', got {inner!r}")
    if config.inner_iters is None:
        raise ConfigurationError("run_proximal needs inner_iters >= 1")
    _require_sigma(model, "the proximal sampler")
    t0 = time.perf_counter()
    rng = make_rng(config.seed, chain_index)
    x = _initial_state(init, rng)
    N = x.shape[0]
    L = model.log_smoothness(N)
    h_prox = config.prox_step
    if h_prox is None:
        h_prox = default_prox_step(model, N)
        if h_prox is None:
            raise ConfigurationError("prox_step is required when the model declares no smoothness")
    elif L and h_prox > 0.5 / L * (1 + 1e-12):
        raise ConfigurationError(f"prox_step = {h_prox:g} exceeds 1/(2L) = {0.5 / L:g}; "
                                 "the oracle target would not be strongly log-concave")
    gamma = config.friction or default_friction(model, N)
    root = math.sqrt(h_prox)
    rec = _Recorder(config, x.shape)
    n_grad = n_dens = accepted = 0
    for i in range(config.n_iters):
        y = x + root * rng.standard_normal(x.shape)
        target = _RestrictedGaussian(model, y, h_prox)
        if inner == "mala":
            kernel = _MalaKernel(target, config.step_size, rng)
            kernel.start(i, y)
            for _ in range(config.inner_iters):
                z = kernel.step(i)
            accepted += kernel.accepted
            n_dens += kernel.n_dens
        else:
            kernel = _UnderdampedKernel(target, config.step_size, gamma, rng)
            v = math.sqrt(0.5) * model.sigma * rng.standard_normal(x.shape)
            kernel.start(i, y, v)
            for _ in range(config.inner_iters):
                z = kernel.step(i)
            # the final drift evaluation of each inner run is not used
        n_grad += kernel.n_grad
        x = z
        rec(i, x)
    if inner == "ulmc":
        n_grad -= config.n_iters
    acc = accepted / (config.n_iters * config.inner_iters) if inner == "mala" else None
    return ChainOutput(rec.samples, acc, time.perf_counter() - t0,
                       n_gradient=n_grad, n_density=n_dens, final_state=x)


SAMPLERS = {
    "lmc": run_lmc,
    "mala": run_mala,
    "ulmc": run_ulmc,
    "ulmc_rm": run_ulmc_rm,
    "proximal": run_proximal,
}


def run_sampler(name, model, config, init, *, inner="mala", chain_index=None):
    if name not in SAMPLERS:
        raise ConfigurationError(f"unknown sampler {name!r}; expected one of {sorted(SAMPLERS)}")
    if name == "proximal":
        return run_proximal(model, config, init, inner, chain_index=chain_index)
    return SAMPLERS[name](model, config, init, chain_index=chain_index)


def _max_workers(n_chains):
    cap = os.environ.get("MF_SAMPLER_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n_chains, limit))


def sample_mean_field(model, sampler, config, init, *, n_chains=1, inner="mala",
                      return_chains=False):
    """Run a sampler on ``mu^{1:N}`` and keep the first ``k_out`` particles.

    Returns an array of shape ``(n_chains * n_keep, k, d)``; by
    exchangeability its rows approximate draws from ``mu^{1:k}``. With
    several chains each one gets a sub-seed derived from
    ``(config.seed, chain_index)``; results do not depend on the worker count.
    """
    n_chains = check_int(n_chains, "n_chains", minimum=1)
    if n_chains == 1:
        chains = [run_sampler(sampler, model, config, init, inner=inner)]
    else:
        with ThreadPoolExecutor(max_workers=_max_workers(n_chains)) as pool:
            futures = [pool.submit(run_sampler, sampler, model, config, init,
                                   inner=inner, chain_index=c) for c in range(n_chains)]
            chains = [f.result() for f in futures]
    N = chains[0].samples.shape[1]
    k = config.k_out or N
    if k > N:
        raise ConfigurationError(f"k_out = {k} exceeds N = {N}")
    out = np.concatenate([c.samples[:, :k] for c in chains], axis=0)
    return (out, chains) if return_chains else out
