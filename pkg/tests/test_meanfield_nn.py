from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfsampling import meanfield_nn as nn
from mfsampling.estimators import MeanFieldNetRegressor, train_network
from mfsampling.exceptions import ModelError


def scalar_predict(neurons, x):
    total = 0.0
    for a, *w in neurons:
        total += math.tanh(a) * math.tanh(sum(wi * xi for wi, xi in zip(w, x)))
    return total / len(neurons)


@pytest.fixture
def instance(rng):
    data = nn.Dataset(rng.standard_normal((6, 2)), rng.standard_normal(6))
    return data, rng.standard_normal((5, 3))


class TestPredict:
    def test_zero_output_weights(self, rng):
        neurons = np.column_stack([np.zeros(4), rng.standard_normal((4, 2))])
        assert nn.predict(neurons, [0.3, -2.0]) == 0.0

    def test_zero_input_weights(self):
        assert nn.predict([[0.7, 0.0]], [5.0]) == 0.0

    def test_mixed_signs_by_hand(self):
        neurons = np.array([[0.5, 1.0, -1.0], [-1.2, 0.3, 0.8]])
        x = [0.4, 0.9]
        expected = 0.5 * (math.tanh(0.5) * math.tanh(-0.5) + math.tanh(-1.2) * math.tanh(0.84))
        assert nn.predict(neurons, x) == pytest.approx(expected, rel=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 1000))
    def test_matches_scalar_loop(self, N, d_in, seed):
        r = np.random.default_rng(seed)
        neurons, x = r.standard_normal((N, 1 + d_in)) * 2, r.standard_normal(d_in)
        assert nn.predict(neurons, x) == pytest.approx(scalar_predict(neurons, x), abs=1e-14)
        assert abs(nn.predict(neurons, x)) <= 1.0

    def test_sign_symmetry(self, instance):
        data, neurons = instance
        np.testing.assert_allclose(nn.predict_batch(-neurons, data.inputs),
                                   nn.predict_batch(neurons, data.inputs), atol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ModelError):
            nn.predict(np.zeros((2, 3)), [1.0])


class TestLoss:
    def test_perfect_fit(self):
        neurons = np.array([[0.4, 1.0, 0.0]])
        X = np.array([[0.5, 0.0], [-1.0, 3.0]])
        data = nn.Dataset(X, nn.predict_batch(neurons, X))
        assert nn.nn_F0(neurons, data) == pytest.approx(0.0, abs=1e-30)

    def test_zero_network(self):
        data = nn.Dataset([[1.0], [2.0]], [0.5, -2.0])
        assert nn.nn_F0(np.zeros((3, 2)), data) == pytest.approx(0.5 * (0.25 + 4.0))

    def test_brute_force(self, instance):
        data, neurons = instance
        expected = sum(0.5 * (scalar_predict(neurons, x) - y) ** 2 for x, y in zip(data.inputs, data.targets))
        assert nn.nn_F0(neurons, data) == pytest.approx(expected, rel=1e-13)

    def test_bounded(self, instance):
        data, neurons = instance
        assert nn.nn_F0(neurons * 10, data) <= data.n * 0.5 * (1 + np.max(np.abs(data.targets))) ** 2


class TestGradient:
    def test_zero_residual(self):
        neurons = np.array([[0.4, 1.0], [0.2, -0.5]])
        X = np.array([[0.5], [2.0]])
        data = nn.Dataset(X, nn.predict_batch(neurons, X))
        np.testing.assert_allclose(nn.nn_w2_grad(neurons, np.array([1.0, 1.0]), data), 0.0, atol=1e-15)

    def test_single_point_by_hand(self):
        a, w, x, y = 0.3, -0.7, 1.5, 0.2
        data = nn.Dataset([[x]], [y])
        s = w * x
        r = math.tanh(a) * math.tanh(s) - y
        expected = [r / math.cosh(a) ** 2 * math.tanh(s), r * math.tanh(a) / math.cosh(s) ** 2 * x]
        np.testing.assert_allclose(nn.nn_w2_grad([[a, w]], [a, w], data), expected, rtol=1e-14)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 10 ** 6))
    def test_identity_with_particle_gradient(self, N, d_in, seed):
        r = np.random.default_rng(seed)
        data = nn.Dataset(r.standard_normal((4, d_in)), r.standard_normal(4))
        neurons = r.standard_normal((N, 1 + d_in))
        assert nn.gradient_identity_error(neurons, data) <= 1e-5

    def test_batch_matches_rows(self, instance):
        data, neurons = instance
        batch = nn.nn_w2_grad(neurons, neurons, data)
        for i in range(neurons.shape[0]):
            np.testing.assert_allclose(batch[i], nn.nn_w2_grad(neurons, neurons[i], data), atol=1e-15)

    def test_general_model_drift(self, instance):
        data, neurons = instance
        model = nn.make_nn_model(data, lam=0.2, sigma=0.1)
        np.testing.assert_allclose(model.drift(neurons),
                                   -nn.nn_w2_grad(neurons, neurons, data) - 0.2 * neurons)


class TestConstants:
    def test_trivial_dataset(self):
        B, _ = nn.nn_constants(nn.Dataset([[0.0]], [0.0]), radius=0.0)
        assert B == pytest.approx(1.0)

    def test_doubling_targets(self, instance):
        data, _ = instance
        B1, _ = nn.nn_constants(data)
        B2, _ = nn.nn_constants(nn.Dataset(data.inputs, 2 * data.targets))
        assert B2 <= 2 * B1

    def test_radius_too_small(self, instance):
        with pytest.raises(ValueError):
            nn.nn_constants(instance[0], radius=0.01)

    def test_gradient_bound_dominates_samples(self):
        r = np.random.default_rng(7)
        X = r.uniform(-1, 1, size=(5, 2))
        data = nn.Dataset(X, r.uniform(-1, 1, size=5))
        B, _ = nn.nn_constants(data, radius=math.sqrt(2))
        worst = 0.0
        for _ in range(100):
            neurons = r.standard_normal((10, 3)) * 3
            thetas = r.standard_normal((100, 3)) * 3
            worst = max(worst, np.linalg.norm(nn.nn_w2_grad(neurons, thetas, data), axis=1).max())
        assert worst <= B

    def test_smoothness_bound_dominates_finite_differences(self):
        r = np.random.default_rng(8)
        data = nn.Dataset(r.uniform(-1, 1, size=(3, 2)), r.uniform(-1, 1, size=3))
        _, beta = nn.nn_constants(data)
        worst = 0.0
        for _ in range(300):
            neurons = r.standard_normal((6, 3)) * 2
            theta, dtheta = r.standard_normal(3) * 2, r.standard_normal(3) * 1e-3
            g1 = nn.nn_w2_grad(neurons, theta, data)
            g2 = nn.nn_w2_grad(neurons, theta + dtheta, data)
            worst = max(worst, np.linalg.norm(g2 - g1) / np.linalg.norm(dtheta))
        assert worst <= beta


class TestDataset:
    def test_load_with_header(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,y\n1,2,3\n4,5,6\n")
        data = nn.load_dataset(p)
        assert data.n == 2 and data.d_in == 2
        np.testing.assert_array_equal(data.targets, [3, 6])

    def test_load_without_header(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,3\n\n4,6\n")
        assert nn.load_dataset(p).n == 2

    def test_bad_row_is_named(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x,y\n1,2\n3,oops\n")
        with pytest.raises(ValueError, match="row 3"):
            nn.load_dataset(p)

    def test_ragged_row(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,2\n3,4,5\n")
        with pytest.raises(ValueError, match="row 2"):
            nn.load_dataset(p)

    def test_non_finite_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,nan\n")
        with pytest.raises(ValueError, match="row 1"):
            nn.load_dataset(p)

    def test_toy(self):
        data = nn.toy_dataset()
        assert data.n == 4 and data.d_in == 2 and data.radius == 1.0


class TestTraining:
    def test_deterministic_gd_decreases(self):
        data = nn.toy_dataset()
        _, history, _ = train_network(data, 20, 0.0, 0.0, 0.01, 300, seed=3, log_every=1)
        f0 = history[:, 1]
        assert np.all(np.diff(f0) <= 1e-12)
        assert f0[-1] < f0[0]

    def test_seed_reproducible(self):
        data = nn.toy_dataset()
        a = train_network(data, 10, 0.1, 0.01, 0.02, 50, seed=4)[1]
        b = train_network(data, 10, 0.1, 0.01, 0.02, 50, seed=4)[1]
        np.testing.assert_array_equal(a, b)

    def test_ulmc_variant(self):
        data = nn.toy_dataset()
        _, history, _ = train_network(data, 30, 0.1, 0.01, 0.05, 400, sampler="ulmc", seed=5, log_every=50)
        assert history[-1, 1] < history[0, 1]

    def test_regressor_api(self):
        data = nn.toy_dataset()
        reg = MeanFieldNetRegressor(n_neurons=40, sigma=0.1, step_size=0.02, n_iters=1500, seed=1)
        reg.fit(data.inputs, data.targets)
        assert reg.score(data.inputs, data.targets) > 0.8
        assert reg.get_params()["n_neurons"] == 40
        with pytest.raises(ValueError):
            reg.predict(np.zeros((2, 3)))
