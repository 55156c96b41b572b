import itertools

import numpy as np
import pytest

from dufs.errors import InvalidInputError
from dufs.gates import GateParams, gates_from_noise, open_probability
from dufs.gradcheck import finite_difference_gradient, random_instance, run_gradcheck
from dufs.graph import GlobalBandwidth, KernelConfig, LocalMaxBandwidth, preprocess
from dufs.objective import (LambdaRegularized, ParameterFree, TrainConfig, evaluate,
                            gated_denominator, loss_gradient, loss_lambda, loss_paramfree,
                            loss_value)

GLOBAL = KernelConfig(GlobalBandwidth(1.0))


def sample_at(params, z_target):
    """Noise that realizes the gates ``z_target`` exactly."""
    return gates_from_noise(params, np.asarray(z_target, float) - params.mu)


def oracle_trace(X, z, beta, t):
    Xg = X * z
    S = ((Xg[:, None, :] - Xg[None, :, :]) ** 2).sum(-1)
    K = np.exp(-S / beta)
    P = K / K.sum(1, keepdims=True)
    return np.trace(Xg.T @ np.linalg.matrix_power(P, t) @ Xg)


class TestLossValues:
    def test_hand_oracle_3x2(self):
        X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        params = GateParams(np.array([0.5, 0.5]))
        sample = sample_at(params, [0.8, 0.3])
        # S between rows with z = (0.8, 0.3): |r0-r1|^2 = .64+.09, |r0-r2|^2 = .09, |r1-r2|^2 = .64
        S = np.array([[0, 0.73, 0.09], [0.73, 0, 0.64], [0.09, 0.64, 0]])
        K = np.exp(-S)
        P = K / K.sum(1, keepdims=True)
        Xg = X * [0.8, 0.3]
        T = np.trace(Xg.T @ P @ P @ Xg)
        psum = open_probability(params).sum()
        cfg = TrainConfig(loss=LambdaRegularized(0.7), kernel=GLOBAL)
        assert loss_lambda(X, params, sample, cfg) == pytest.approx(-T / 3 + 0.7 * psum, rel=1e-12)
        cfg = TrainConfig(loss=ParameterFree(1e-8), kernel=GLOBAL)
        assert loss_paramfree(X, params, sample, cfg) == pytest.approx(-T / (3 * psum + 1e-8), rel=1e-12)

    def test_closed_gates_zero_trace(self):
        X = preprocess(np.random.default_rng(0).normal(size=(8, 3))).values
        params = GateParams(np.full(3, -5.0))
        sample = sample_at(params, [0, 0, 0])
        cfg = TrainConfig(loss=ParameterFree(), kernel=GLOBAL)
        assert loss_value(X, params, sample, cfg) == pytest.approx(0.0, abs=1e-12)

    def test_lambda_zero_is_plain_trace(self):
        rng = np.random.default_rng(1)
        X = preprocess(rng.normal(size=(10, 4))).values
        params = GateParams(rng.uniform(0, 1, 4))
        sample = gates_from_noise(params, rng.normal(0, 0.5, 4))
        cfg = TrainConfig(loss=LambdaRegularized(0.0), t=3, kernel=GLOBAL)
        expected = -oracle_trace(X, sample.z, 1.0, 3) / 10
        assert loss_value(X, params, sample, cfg) == pytest.approx(expected, rel=1e-10)

    def test_wrong_variant_rejected(self):
        X = np.eye(3)
        params = GateParams(np.full(3, 0.5))
        with pytest.raises(InvalidInputError):
            loss_lambda(X, params, sample_at(params, [1, 1, 1]), TrainConfig())

    def test_shape_mismatch(self):
        params = GateParams(np.full(3, 0.5))
        with pytest.raises(InvalidInputError):
            loss_value(np.eye(4), params, sample_at(params, [1, 1, 1]), TrainConfig())

    def test_parameter_free_corners_exhaustive(self):
        """At 0/1 corners the loss is minus the per-open-gate trace score."""
        rng = np.random.default_rng(2)
        X = preprocess(rng.normal(size=(12, 6))).values
        cfg = TrainConfig(loss=ParameterFree(), kernel=KernelConfig(LocalMaxBandwidth(2, 2.0)))
        for corner in itertools.product((0.0, 1.0), repeat=6):
            z = np.array(corner)
            params = GateParams(np.where(z > 0, 3.0, -3.0))
            loss = loss_value(X, params, sample_at(params, z), cfg)
            if z.sum() == 0:
                assert loss == pytest.approx(0.0, abs=1e-12)
                continue
            beta = gated_denominator(X, z, cfg.kernel)
            psum = open_probability(params).sum()
            expected = -oracle_trace(X, z, beta, 2) / (12 * psum + 1e-8)
            assert loss == pytest.approx(expected, rel=1e-9)


class TestGradient:
    def test_gradcheck_fixed_denominator(self):
        report = run_gradcheck(50, seed=0)
        assert len(report.cases) == 50
        assert report.passed, report.worst

    def test_gradcheck_moving_denominator(self):
        report = run_gradcheck(50, seed=1, fixed_denominator=False)
        assert report.passed, report.worst

    def test_sign_flip_detected(self):
        flipped = lambda *a, **k: -loss_gradient(*a, **k)
        assert not run_gradcheck(5, seed=0, gradient_fn=flipped).passed

    @pytest.mark.parametrize("denominator", ["sigma_hat", "two_sigma_sq"])
    def test_denominator_conventions(self, denominator):
        rng = np.random.default_rng(3)
        X, params, eps = random_instance(rng, 10, 4)
        cfg = TrainConfig(kernel=KernelConfig(LocalMaxBandwidth(2, 3.0), denominator))
        analytic = loss_gradient(X, params, gates_from_noise(params, eps), cfg)
        numeric = finite_difference_gradient(X, params, eps, cfg)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-9)

    def test_clipped_gate_only_regularizer(self):
        rng = np.random.default_rng(4)
        X = preprocess(rng.normal(size=(9, 3))).values
        params = GateParams(np.array([0.5, 0.4, -2.0]))
        sample = sample_at(params, [0.7, 0.6, 0.0])
        cfg = TrainConfig(loss=LambdaRegularized(0.3), kernel=GLOBAL)
        grad = loss_gradient(X, params, sample, cfg)
        dp = np.exp(-0.5 * (2.0 / 0.5) ** 2) / (0.5 * np.sqrt(2 * np.pi))
        assert grad[2] == pytest.approx(0.3 * dp, rel=1e-12)

    def test_zero_lambda_gradient_pushes_open(self):
        """With lambda = 0 and a fixed kernel, widening a gate raises the trace."""
        rng = np.random.default_rng(5)
        X = preprocess(rng.normal(size=(15, 2))).values
        params = GateParams(np.array([0.5, 0.5]))
        sample = sample_at(params, [0.5, 0.5])
        cfg = TrainConfig(loss=LambdaRegularized(0.0), kernel=KernelConfig(GlobalBandwidth(10.0)))
        _, grad = evaluate(X, params, sample, cfg)
        assert np.all(grad < 0)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(t=0), dict(t=1.5), dict(learning_rate=-1), dict(epochs=0),
                                    dict(batch_size=1), dict(sigma_g=0)])
    def test_rejects(self, kw):
        with pytest.raises(InvalidInputError):
            TrainConfig(**kw)

    def test_negative_lambda(self):
        with pytest.raises(InvalidInputError):
            LambdaRegularized(-0.1)
