"""scikit-learn style wrappers around the sampler and the mean-field network."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import meanfield_nn as nn
from .samplers import SamplerConfig, make_rng, run_sampler, sample_mean_field

__all__ = ["MeanFieldSampler", "MeanFieldNetRegressor", "train_network"]


class MeanFieldSampler(BaseEstimator):
    """Run one sampler on ``mu^{1:N}`` of a model; ``fit`` stores the k-particle draws.

    Attributes set by :meth:`fit`: ``samples_`` of shape ``(n, k, d)``,
    ``chains_`` (list of :class:`~mfsampling.samplers.ChainOutput`),
    ``acceptance_rate_`` and ``oracle_calls_``.
    """

    def __init__(self, sampler="lmc", n_particles=8, dim=1, step_size=0.05, n_iters=1000,
                 burn_in=0, thinning=1, friction=None, prox_step=None, inner_iters=None,
                 inner="mala", k_out=None, n_chains=1, seed=0):
        self.sampler = sampler
        self.n_particles = n_particles
        self.dim = dim
        self.step_size = step_size
        self.n_iters = n_iters
        self.burn_in = burn_in
        self.thinning = thinning
        self.friction = friction
        self.prox_step = prox_step
        self.inner_iters = inner_iters
        self.inner = inner
        self.k_out = k_out
        self.n_chains = n_chains
        self.seed = seed

    def _config(self):
        return SamplerConfig(step_size=self.step_size, n_iters=self.n_iters, burn_in=self.burn_in,
                             thinning=self.thinning, friction=self.friction,
                             prox_step=self.prox_step, inner_iters=self.inner_iters,
                             seed=self.seed, k_out=self.k_out)

    def fit(self, model, init=None):
        init = (self.n_particles, self.dim) if init is None else init
        self.samples_, self.chains_ = sample_mean_field(
            model, self.sampler, self._config(), init, n_chains=self.n_chains,
            inner=self.inner, return_chains=True)
        rates = [c.acceptance_rate for c in self.chains_]
        self.acceptance_rate_ = None if rates[0] is None else float(np.mean(rates))
        self.oracle_calls_ = sum(c.oracle_calls for c in self.chains_)
        return self

    def marginal_moments(self, n_batches=32):
        from .diagnostics import empirical_moments

        check_is_fitted(self, "samples_")
        return empirical_moments(self.samples_.reshape(self.samples_.shape[0], -1), n_batches)


def train_network(data, n_neurons, sigma, lam, step_size, n_iters, *, sampler="lmc",
                  seed=0, log_every=1, init_scale=1.0, friction=None):
    """Noisy gradient descent (or its underdamped analogue) on the network's particles.

    Returns ``(neurons, history, initial_neurons)``; ``history`` rows are
    ``(step, F0, F0 + lam/2 * mean ||theta||^2)``; the entropy part of the
    free energy is not estimated. Row 0 is the initialization.
    """
    if sampler not in ("lmc", "ulmc"):
        raise ValueError(f"network training supports 'lmc' or 'ulmc', got {sampler!r}")
    model = nn.make_nn_model(data, lam, sigma)
    rng = make_rng(seed, chain_index=10 ** 6)  # init stream, separate from the chain
    theta0 = init_scale * rng.standard_normal((n_neurons, 1 + data.d_in))
    config = SamplerConfig(step_size=step_size, n_iters=n_iters, burn_in=log_every - 1,
                           thinning=log_every, friction=friction, seed=seed)
    out = run_sampler(sampler, model, config, theta0)
    states = np.concatenate([theta0[None], out.samples])
    steps = np.concatenate([[0], np.arange(log_every, n_iters + 1, log_every)])
    f0 = np.array([nn.nn_F0(s, data) for s in states])
    reg = f0 + 0.5 * lam * np.mean(np.sum(states ** 2, axis=2), axis=1)
    history = np.column_stack([steps, f0, reg])
    return out.final_state, history, theta0


class MeanFieldNetRegressor(RegressorMixin, BaseEstimator):
    """Two-layer tanh network with ``n_neurons`` particles trained by noisy GD."""

    def __init__(self, n_neurons=50, sigma=0.1, lam=0.01, step_size=0.01, n_iters=2000,
                 sampler="lmc", init_scale=1.0, log_every=10, seed=0):
        self.n_neurons = n_neurons
        self.sigma = sigma
        self.lam = lam
        self.step_size = step_size
        self.n_iters = n_iters
        self.sampler = sampler
        self.init_scale = init_scale
        self.log_every = log_every
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        self.n_features_in_ = X.shape[1]
        data = nn.Dataset(X, y)
        self.neurons_, self.history_, _ = train_network(
            data, self.n_neurons, self.sigma, self.lam, self.step_size, self.n_iters,
            sampler=self.sampler, seed=self.seed, log_every=self.log_every,
            init_scale=self.init_scale)
        return self

    def predict(self, X):
        check_is_fitted(self, "neurons_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return nn.predict_batch(self.neurons_, X)
