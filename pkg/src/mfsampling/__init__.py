"""Sampling mean-field Gibbs measures through their N-particle approximations."""

from __future__ import annotations

__version__ = "0.1.0"

from .diagnostics import bound_report, empirical_moments, empirical_w2sq, extract_marginal, scaling_exponent
from .estimators import MeanFieldNetRegressor, MeanFieldSampler, train_network
from .exceptions import ConfigurationError, DivergenceError, DomainError, EvaluationError, ModelError
from .gaussian_oracle import (GaussianDist, GaussianSpec, kl_gaussian, kl_marginal_dense,
                              kl_marginal_spectral, lmc_stationary_cov, marginals, w2_gaussian,
                              w2sq_marginal)
from .meanfield_nn import Dataset, load_dataset, make_nn_model, nn_F0, nn_w2_grad, predict, toy_dataset
from .model import (GeneralModel, PairwiseModel, ParticleState, make_double_well,
                    make_gaussian_pairwise, pairwise_as_general)
from .samplers import (ChainOutput, SamplerConfig, run_lmc, run_mala, run_proximal, run_ulmc,
                       run_ulmc_rm, sample_mean_field)
from .theory import RegularityParams, plan
