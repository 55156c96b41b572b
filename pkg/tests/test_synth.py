import math

import mpmath
import numpy as np
import pytest
from scipy import stats

from dufs.errors import InvalidInputError
from dufs.evalkit import clustering_accuracy, spectral_clustering
from dufs.graph import KernelConfig, LocalMaxBandwidth
from dufs.synth import (BoundInputs, TwoClusterConfig, TwoMoonsConfig, chi_square_tail_bound,
                        crossing_point, empirical_breakdown_sweep, gen_two_clusters,
                        gen_two_moons, predicted_max_nuisance_dims)


def mp_bound(r, n, eps, exponent):
    mpmath.mp.dps = 50
    gamma = -mpmath.log(1 - mpmath.power(1 - mpmath.mpf(eps), mpmath.mpf(1) / exponent))
    d = ((mpmath.mpf(r) ** 2 - 2 * gamma) / (4 * mpmath.sqrt(gamma))) ** 2
    return float(gamma), float(d)


class TestTwoMoons:
    def test_noiseless_points_on_arcs(self):
        data = gen_two_moons(TwoMoonsConfig(100, 0, 0.0))
        x, y = data.X[:, 0], data.X[:, 1]
        a, b = data.labels == 0, data.labels == 1
        np.testing.assert_allclose(x[a] ** 2 + y[a] ** 2, 1.0, atol=1e-12)
        np.testing.assert_allclose((1 - x[b]) ** 2 + (0.5 - y[b]) ** 2, 1.0, atol=1e-12)
        labels = spectral_clustering(data.X, 2, KernelConfig(LocalMaxBandwidth(2, 2.0)))
        assert clustering_accuracy(labels, data.labels) == 1.0

    def test_shape_and_informative(self):
        data = gen_two_moons(TwoMoonsConfig(100, 8))
        assert data.X.shape == (100, 10)
        assert data.informative.tolist() == [0, 1]
        assert np.bincount(data.labels).tolist() == [50, 50]

    def test_gaussian_nuisance_means(self):
        data = gen_two_moons(TwoMoonsConfig(400, 20, seed=3))
        assert np.all(np.abs(data.X[:, 2:].mean(axis=0)) < 4 / math.sqrt(400))

    def test_uniform_nuisance_range(self):
        data = gen_two_moons(TwoMoonsConfig(50, 5, nuisance_dist="uniform"))
        assert data.X[:, 2:].min() >= 0 and data.X[:, 2:].max() < 1

    def test_deterministic(self):
        a = gen_two_moons(TwoMoonsConfig(50, 4, seed=9))
        b = gen_two_moons(TwoMoonsConfig(50, 4, seed=9))
        assert a.X.tobytes() == b.X.tobytes()

    @pytest.mark.parametrize("kw", [dict(n=3), dict(d_nuisance=-1), dict(signal_noise_var=-0.1)])
    def test_validation(self, kw):
        with pytest.raises(InvalidInputError):
            TwoMoonsConfig(**kw)


class TestTwoClusters:
    def test_point_masses(self):
        data = gen_two_clusters(TwoClusterConfig(5, 3.0, 0))
        assert data.X.shape == (10, 1)
        assert set(data.X[:5, 0]) == {0.0} and set(data.X[5:, 0]) == {3.0}

    def test_distance_moments(self):
        n, d, s, r = 200, 10, 0.8, 2.0
        data = gen_two_clusters(TwoClusterConfig(n, r, d, s, seed=1))
        A, B = data.X[:n], data.X[n:]
        same = np.sum((A[:100] - A[100:]) ** 2, axis=1)
        cross = np.sum((A - B) ** 2, axis=1)
        for sample, mean in ((same, 2 * d * s * s), (cross, r * r + 2 * d * s * s)):
            se = sample.std(ddof=1) / math.sqrt(sample.size)
            assert abs(sample.mean() - mean) < 3 * se + 1e-12

    def test_chi_square_shift_ks(self):
        n, d = 300, 6
        data = gen_two_clusters(TwoClusterConfig(n, 3.0, d, seed=2))
        A, B = data.X[:n], data.X[n:]
        same = np.sum((A[:150] - A[150:]) ** 2, axis=1)
        cross = np.sum((A[:150] - B[:150]) ** 2, axis=1)
        assert stats.kstest(same, stats.chi2(d).cdf).pvalue > 0.01
        assert stats.kstest(cross - 9.0, stats.chi2(d).cdf).pvalue > 0.01


class TestTailBounds:
    def test_vacuous_at_zero(self):
        b = chi_square_tail_bound(10, 0.0)
        assert b.upper_bound == 1.0 and b.lower_bound == 1.0

    def test_thresholds(self):
        b = chi_square_tail_bound(10, 2.0)
        assert b.upper_threshold == pytest.approx(2 * math.sqrt(20) + 4)
        assert b.lower_threshold == pytest.approx(2 * math.sqrt(20))
        assert b.upper_bound == pytest.approx(0.1353, abs=1e-4)

    def test_monte_carlo(self):
        rng = np.random.default_rng(0)
        x = rng.chisquare(10, size=1_000_000)
        b = chi_square_tail_bound(10, 2.0)
        assert np.mean(x - 10 >= b.upper_threshold) <= b.upper_bound
        assert np.mean(10 - x >= b.lower_threshold) <= b.lower_bound


class TestPredictedDims:
    def test_reference_value(self):
        res = predicted_max_nuisance_dims(BoundInputs(10.0, 50, 0.05))
        gamma, d = mp_bound(10.0, 50, 0.05, 2 * 50 ** 2 - 50)
        assert res.gamma == pytest.approx(gamma, rel=1e-10)
        assert res.d_max == pytest.approx(d, rel=1e-10)
        assert res.gamma == pytest.approx(11.48, abs=0.01)
        assert round(res.d_max) == 32

    def test_alternative_exponent(self):
        res = predicted_max_nuisance_dims(BoundInputs(10.0, 50, 0.05, "2n^2-1"))
        gamma, d = mp_bound(10.0, 50, 0.05, 2 * 50 ** 2 - 1)
        assert res.gamma == pytest.approx(gamma, rel=1e-10)
        assert res.d_max == pytest.approx(d, rel=1e-10)

    def test_insufficient_separation(self):
        res = predicted_max_nuisance_dims(BoundInputs(1.0, 50, 0.05))
        assert res.d_max == 0.0 and not res.sufficient

    def test_underflow_reported(self):
        res = predicted_max_nuisance_dims(BoundInputs(10.0, 50, 1e-320))
        assert res.d_max == 0.0 and not res.sufficient and res.note

    def test_quartic_law(self):
        ratios = [predicted_max_nuisance_dims(BoundInputs(2 * r, 50)).d_max
                  / predicted_max_nuisance_dims(BoundInputs(r, 50)).d_max for r in (20, 100, 1000)]
        assert abs(ratios[-1] - 16) < abs(ratios[0] - 16)
        assert ratios[-1] == pytest.approx(16, rel=1e-3)

    def test_monotone(self):
        ds = [predicted_max_nuisance_dims(BoundInputs(r, 50)).d_max for r in np.linspace(5, 20, 16)]
        assert np.all(np.diff(ds) > 0)
        ds = [predicted_max_nuisance_dims(BoundInputs(10, n)).d_max for n in (10, 50, 200, 1000)]
        assert np.all(np.diff(ds) < 0)

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            BoundInputs(1.0, 10, 1.0)


class TestBreakdown:
    def test_crossing_interpolation(self):
        assert crossing_point([0, 10, 20], [0.9, 0.8, 0.6], 0.7) == pytest.approx(15.0)
        assert crossing_point([0, 10], [0.5, 0.4], 0.7) == 0.0
        assert math.isnan(crossing_point([0, 10], [0.9, 0.8], 0.7))

    def test_large_r_censored(self):
        sweep = empirical_breakdown_sweep([50.0], [1, 5], n=10, seeds=[0, 1])
        assert sweep.censored.all()

    def test_zero_r_breaks_immediately(self):
        sweep = empirical_breakdown_sweep([0.0], [2, 5], n=20, seeds=range(5))
        assert sweep.d_star[0] == 2.0

    def test_empty_grid(self):
        with pytest.raises(InvalidInputError):
            empirical_breakdown_sweep([], [1, 2])
