from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from _linear_oracle import rmm_stationary_cov, ulmc_stationary_cov
from mfsampling import gaussian_oracle as go
from mfsampling.diagnostics import empirical_moments
from mfsampling.exceptions import ConfigurationError, DivergenceError
from mfsampling.model import PairwiseModel, make_double_well
from mfsampling.samplers import (SamplerConfig, default_friction, make_rng, mala_log_ratio,
                                 midpoint_increment_cov, run_lmc, run_mala, run_proximal, run_sampler,
                                 run_ulmc, run_ulmc_rm, sample_mean_field, underdamped_increment_cov)

SPEC = go.GaussianSpec(np.array([[2.5, 0.5], [0.5, 2.0]]), 1.0, math.sqrt(2.0), 4, 4)
MODEL = SPEC.pairwise_model()


def free_model(sigma):
    zero = lambda x: np.zeros(x.shape[:-1])  # noqa: E731
    zgrad = lambda x: np.zeros_like(x)  # noqa: E731
    return PairwiseModel(V=zero, grad_V=zgrad, W=zero, grad_W=zgrad, sigma=sigma,
                         alpha_V=0.0, beta_V=0.0, alpha_W=0.0, beta_W=0.0)


def cfg(**kw):
    kw.setdefault("step_size", 0.1)
    kw.setdefault("n_iters", 200)
    return SamplerConfig(**kw)


def max_z(samples, target, n_batches=40):
    X = samples.reshape(samples.shape[0], -1)
    m = empirical_moments(X, n_batches)
    iu = np.triu_indices(X.shape[1])
    return float(np.max(np.abs(m.cov - target)[iu] / m.se_cov[iu]))


# -- Gaussian increments against quadrature ------------------------------------

def _kernels(g):
    Ex = lambda t: (1 - math.exp(-g * t)) / g  # noqa: E731
    Ev = lambda t: math.exp(-g * t)  # noqa: E731
    return Ex, Ev


@pytest.mark.parametrize("gamma,h", [(1.0, 0.1), (2.9, 0.4), (0.5, 2.0), (10.0, 0.05), (1.0, 1e-4)])
def test_underdamped_cov_matches_quadrature(gamma, h):
    Ex, Ev = _kernels(gamma)
    q = lambda f: gamma * quad(f, 0, h, epsabs=1e-17, epsrel=1e-12)[0]  # noqa: E731
    expected = np.array([[q(lambda s: Ex(h - s) ** 2), q(lambda s: Ex(h - s) * Ev(h - s))],
                         [0.0, q(lambda s: Ev(h - s) ** 2)]])
    expected[1, 0] = expected[0, 1]
    np.testing.assert_allclose(underdamped_increment_cov(gamma, h), expected, rtol=1e-8)


@pytest.mark.parametrize("gamma,h,u", [(1.0, 0.1, 0.3), (2.9, 0.4, 0.9), (0.5, 2.0, 0.5),
                                       (10.0, 0.05, 0.01), (1.0, 1e-3, 0.7)])
def test_midpoint_cov_matches_quadrature(gamma, h, u):
    a = u * h
    Ex, Ev = _kernels(gamma)
    q = lambda f, T: gamma * quad(f, 0, T, epsabs=1e-18, epsrel=1e-12)[0]  # noqa: E731
    mm = q(lambda s: Ex(a - s) ** 2, a)
    mx = q(lambda s: Ex(a - s) * Ex(h - s), a)
    mv = q(lambda s: Ex(a - s) * Ev(h - s), a)
    S = midpoint_increment_cov(gamma, h, a)
    np.testing.assert_allclose([S[0, 0], S[0, 1], S[0, 2]], [mm, mx, mv], rtol=1e-7)
    np.testing.assert_allclose(S[1:, 1:], underdamped_increment_cov(gamma, h))
    assert np.all(np.linalg.eigvalsh(S) > -1e-15)


# -- LMC -----------------------------------------------------------------------

class TestLMC:
    def test_zero_drift_no_noise_is_constant(self):
        x0 = np.arange(6.0).reshape(3, 2)
        out = run_lmc(free_model(0.0), cfg(n_iters=50), x0)
        np.testing.assert_array_equal(out.final_state, x0)
        assert np.all(out.samples == x0)

    def test_oracle_count(self):
        out = run_lmc(MODEL, cfg(n_iters=123), (4, 2))
        assert (out.n_gradient, out.n_density, out.oracle_calls) == (123, 0, 123)
        assert out.acceptance_rate is None

    def test_burn_in_and_thinning(self):
        out = run_lmc(MODEL, cfg(n_iters=100, burn_in=10, thinning=7), (4, 2))
        assert out.samples.shape == (len(range(10, 100, 7)), 4, 2)

    def test_seed_determinism(self):
        a = run_lmc(MODEL, cfg(seed=5), (4, 2))
        b = run_lmc(MODEL, cfg(seed=5), (4, 2))
        c = run_lmc(MODEL, cfg(seed=6), (4, 2))
        assert a.samples.tobytes() == b.samples.tobytes()
        assert not np.array_equal(a.samples, c.samples)

    def test_divergence_reports_iteration(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(DivergenceError) as info:
                run_lmc(MODEL, cfg(step_size=1.0, n_iters=10_000), (4, 2))
        assert 0 < info.value.iteration < 10_000

    def test_large_step_warns(self):
        with pytest.warns(RuntimeWarning, match="step size"):
            run_lmc(MODEL, cfg(step_size=0.35, n_iters=5), (4, 2))

    @pytest.mark.slow
    def test_stationary_covariance(self):
        out = run_lmc(MODEL, cfg(step_size=0.1, n_iters=150_000, burn_in=1000, seed=21), (4, 2))
        assert max_z(out.samples, go.lmc_stationary_cov(SPEC, 0.1)) <= 3.5


# -- MALA ----------------------------------------------------------------------

class TestMALA:
    def test_log_ratio_antisymmetric(self, rng):
        for _ in range(10):
            x, y = rng.standard_normal((4, 2)), rng.standard_normal((4, 2))
            r = mala_log_ratio(MODEL, x, y, 0.2) + mala_log_ratio(MODEL, y, x, 0.2)
            assert abs(r) <= 1e-10

    def test_log_ratio_zero_for_exact_gaussian_in_limit(self, rng):
        x = rng.standard_normal((4, 2))
        y = x + 1e-4 * rng.standard_normal((4, 2))
        assert abs(mala_log_ratio(MODEL, x, y, 1e-8)) < 1e-5

    def test_tiny_step_always_accepts(self):
        out = run_mala(MODEL, cfg(step_size=1e-6, n_iters=2000), (4, 2))
        assert out.acceptance_rate >= 0.999

    def test_oracle_count(self):
        out = run_mala(MODEL, cfg(n_iters=50), (4, 2))
        assert (out.n_gradient, out.n_density) == (51, 51)
        assert 0.0 <= out.acceptance_rate <= 1.0

    def test_zero_acceptance_warning(self):
        with pytest.warns(RuntimeWarning, match="rejected"):
            run_mala(MODEL, cfg(step_size=50.0, n_iters=10_001), (4, 2))

    def test_requires_noise(self):
        with pytest.raises(ConfigurationError):
            run_mala(free_model(0.0), cfg(), (2, 1))

    def test_seed_determinism(self):
        a = run_mala(MODEL, cfg(seed=9), (4, 2))
        b = run_mala(MODEL, cfg(seed=9), (4, 2))
        assert a.samples.tobytes() == b.samples.tobytes() and a.acceptance_rate == b.acceptance_rate


# -- underdamped ---------------------------------------------------------------

class TestULMC:
    def test_free_velocity_is_ornstein_uhlenbeck(self):
        out = run_ulmc(free_model(math.sqrt(2.0)), cfg(step_size=0.2, n_iters=20_000, friction=1.5, seed=2),
                       (2, 1), init_velocity=np.zeros((2, 1)))
        v = out.velocities[2000:, :, 0].reshape(-1)
        m = empirical_moments(out.velocities[2000:, :, 0], 20)
        # stationary variance sigma^2 / 2 = 1
        assert abs(m.var - 1.0).max() <= 3.5 * m.se_var.max()
        assert abs(v.mean()) < 0.1

    def test_ballistic_motion(self):
        g, h, n = 0.7, 0.1, 30
        x0, v0 = np.array([[1.0], [-2.0]]), np.array([[0.5], [1.5]])
        for run in (run_ulmc, run_ulmc_rm):
            out = run(free_model(0.0), cfg(step_size=h, n_iters=n, friction=g), x0, init_velocity=v0)
            T = n * h
            np.testing.assert_allclose(out.final_state, x0 + v0 * (1 - math.exp(-g * T)) / g, rtol=1e-12)
            np.testing.assert_allclose(out.velocities[-1], v0 * math.exp(-g * T), rtol=1e-12)

    def test_oracle_counts(self):
        assert run_ulmc(MODEL, cfg(n_iters=40), (4, 2)).n_gradient == 41
        assert run_ulmc_rm(MODEL, cfg(n_iters=40), (4, 2)).n_gradient == 80

    def test_default_friction(self):
        assert default_friction(MODEL, 4) == pytest.approx(math.sqrt(2 * MODEL.drift_lipschitz(4)))
        assert default_friction(make_double_well(0.1, 1.0), 4) == 1.0

    @pytest.mark.parametrize("run", [run_ulmc, run_ulmc_rm])
    def test_seed_determinism(self, run):
        a, b = run(MODEL, cfg(seed=3), (4, 2)), run(MODEL, cfg(seed=3), (4, 2))
        assert a.samples.tobytes() == b.samples.tobytes()
        assert a.velocities.tobytes() == b.velocities.tobytes()

    def test_exact_bias_shrinks_along_ladder(self):
        H = go.interaction_precision(SPEC)
        S1 = go.stationary_cov_full(SPEC)
        g = default_friction(MODEL, 4)
        n = H.shape[0]
        ul = [np.linalg.norm(ulmc_stationary_cov(H, SPEC.sigma, g, h)[:n, :n] - S1) for h in (0.4, 0.2, 0.1, 0.05)]
        rm = [np.linalg.norm(rmm_stationary_cov(H, SPEC.sigma, g, h)[:n, :n] - S1) for h in (0.4, 0.2, 0.1, 0.05)]
        assert all(b < a for a, b in zip(ul, ul[1:]))
        assert all(b < a for a, b in zip(rm, rm[1:]))
        assert all(r < u for r, u in zip(rm, ul))

    @pytest.mark.slow
    @pytest.mark.parametrize("run,oracle,h", [(run_ulmc, ulmc_stationary_cov, 0.3),
                                              (run_ulmc_rm, rmm_stationary_cov, 0.5)])
    def test_chain_matches_exact_scheme_covariance(self, run, oracle, h):
        g = default_friction(MODEL, 4)
        out = run(MODEL, cfg(step_size=h, n_iters=60_000, burn_in=500, seed=31), (4, 2))
        S = oracle(go.interaction_precision(SPEC), SPEC.sigma, g, h)
        joint = np.concatenate([out.samples.reshape(len(out.samples), -1),
                                out.velocities.reshape(len(out.samples), -1)], axis=1)
        X = joint.reshape(len(joint), -1)
        m = empirical_moments(X, 40)
        iu = np.triu_indices(X.shape[1])
        assert np.max(np.abs(m.cov - S)[iu] / m.se_cov[iu]) <= 4.0

    @pytest.mark.slow
    def test_midpoint_bias_not_larger_over_seeds(self):
        S1 = go.stationary_cov_full(SPEC)
        errs = {run_ulmc: [], run_ulmc_rm: []}
        for seed in range(10):
            for run in errs:
                steps = 8000 if run is run_ulmc_rm else 16_000  # equal gradient budget
                out = run(MODEL, cfg(step_size=0.4, n_iters=steps, burn_in=200, seed=seed), (4, 2))
                X = out.samples.reshape(len(out.samples), -1)
                errs[run].append(np.linalg.norm(np.cov(X.T) - S1))
        assert np.mean(errs[run_ulmc_rm]) <= np.mean(errs[run_ulmc])


# -- proximal ------------------------------------------------------------------

class TestProximal:
    def test_inner_iters_zero_forbidden(self):
        with pytest.raises(ConfigurationError):
            cfg(inner_iters=0)

    def test_inner_iters_required(self):
        with pytest.raises(ConfigurationError):
            run_proximal(MODEL, cfg(), (4, 2))

    def test_prox_step_precondition(self):
        L = MODEL.log_smoothness(4)
        with pytest.raises(ConfigurationError, match="exceeds"):
            run_proximal(MODEL, cfg(inner_iters=3, prox_step=0.6 / L), (4, 2))
        run_proximal(MODEL, cfg(inner_iters=3, prox_step=0.5 / L, n_iters=5), (4, 2))

    def test_unknown_inner(self):
        with pytest.raises(ConfigurationError):
            run_proximal(MODEL, cfg(inner_iters=3), (4, 2), inner="hmc")

    def test_oracle_counts(self):
        out = run_proximal(MODEL, cfg(n_iters=20, inner_iters=4), (4, 2))
        assert (out.n_gradient, out.n_density) == (100, 100)
        out = run_proximal(MODEL, cfg(n_iters=20, inner_iters=4), (4, 2), inner="ulmc")
        assert (out.n_gradient, out.n_density) == (80, 0)
        assert out.acceptance_rate is None

    def test_seed_determinism(self):
        a = run_proximal(MODEL, cfg(inner_iters=3, seed=4), (4, 2))
        b = run_proximal(MODEL, cfg(inner_iters=3, seed=4), (4, 2))
        assert a.samples.tobytes() == b.samples.tobytes()

    @pytest.mark.slow
    def test_exact_target_with_many_inner_steps(self):
        out = run_proximal(MODEL, cfg(step_size=0.05, n_iters=20_000, burn_in=200, inner_iters=15, seed=41),
                           (4, 2))
        assert max_z(out.samples, go.stationary_cov_full(SPEC)) <= 3.5

    @pytest.mark.slow
    def test_more_inner_steps_do_not_hurt(self):
        S1 = go.stationary_cov_full(SPEC)
        errs = {}
        for inner_iters in (1, 2):
            e = []
            for seed in range(10):
                out = run_proximal(MODEL, cfg(step_size=0.1, n_iters=3000, burn_in=100,
                                              inner_iters=inner_iters, seed=seed), (4, 2), inner="ulmc")
                X = out.samples.reshape(len(out.samples), -1)
                e.append(np.linalg.norm(np.cov(X.T) - S1))
            errs[inner_iters] = np.mean(e)
        assert errs[2] <= errs[1]


# -- Algorithm-level driver ----------------------------------------------------

class TestSampleMeanField:
    def test_full_k_is_unchanged(self):
        c = cfg(n_iters=30, seed=1)
        out = sample_mean_field(MODEL, "lmc", c, (4, 2))
        np.testing.assert_array_equal(out, run_lmc(MODEL, c, (4, 2)).samples)

    def test_first_k(self):
        c = cfg(n_iters=30, seed=1, k_out=2)
        out = sample_mean_field(MODEL, "lmc", c, (4, 2))
        np.testing.assert_array_equal(out, run_lmc(MODEL, c, (4, 2)).samples[:, :2])

    def test_k_too_large(self):
        with pytest.raises(ConfigurationError):
            sample_mean_field(MODEL, "lmc", cfg(k_out=5), (4, 2))

    def test_unknown_sampler(self):
        with pytest.raises(ConfigurationError):
            run_sampler("hmc", MODEL, cfg(), (4, 2))

    def test_chains_independent_of_thread_count(self, monkeypatch):
        c = cfg(n_iters=40, seed=8, k_out=1)
        monkeypatch.setenv("MF_SAMPLER_THREADS", "1")
        a, chains = sample_mean_field(MODEL, "mala", c, (4, 2), n_chains=3, return_chains=True)
        monkeypatch.setenv("MF_SAMPLER_THREADS", "3")
        b = sample_mean_field(MODEL, "mala", c, (4, 2), n_chains=3)
        assert a.tobytes() == b.tobytes()
        assert a.shape == (3 * 40, 1, 2)
        assert not np.array_equal(chains[0].samples, chains[1].samples)

    @pytest.mark.slow
    def test_one_particle_marginal(self):
        c = SamplerConfig(step_size=0.1, n_iters=100_000, burn_in=1000, seed=51, k_out=1)
        out = sample_mean_field(MODEL, "mala", c, (4, 2))
        assert max_z(out, go.stationary_cov_full(SPEC)[:2, :2]) <= 3.5

    @pytest.mark.slow
    def test_relabeling_leaves_moments(self):
        from mfsampling.diagnostics import extract_marginal

        out = run_mala(MODEL, SamplerConfig(step_size=0.1, n_iters=60_000, burn_in=500, seed=52), (4, 2))
        plain = empirical_moments(extract_marginal(out.samples, 2), 30)
        mixed = empirical_moments(extract_marginal(out.samples, 2, relabel=True, rng=1), 30)
        se = np.hypot(plain.se_cov, mixed.se_cov)
        assert np.max(np.abs(plain.cov - mixed.cov) / se) <= 4.0


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(step_size=0.0), dict(n_iters=0), dict(burn_in=10, n_iters=10),
                                    dict(thinning=0), dict(seed=-1), dict(k_out=0), dict(friction=-1.0),
                                    dict(prox_step=0.0), dict(seed=2 ** 64)])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            cfg(**kw)

    def test_rng_substreams(self):
        a = make_rng(5, 0).standard_normal(4)
        b = make_rng(5, 1).standard_normal(4)
        assert not np.array_equal(a, b)
        np.testing.assert_array_equal(a, make_rng(5, 0).standard_normal(4))

    def test_bad_init(self):
        with pytest.raises(ConfigurationError):
            run_lmc(MODEL, cfg(), np.full((4, 2), np.nan))
