import math

import numpy as np
import pytest

from larpcesk import kernels, kriging
from larpcesk.base import TrendKind, TrendModel, cholesky_with_nugget
from larpcesk.kriging import blue_estimates, fit_kriging, kriging_at, predict_kriging
from larpcesk.optimize import GaConfig
from larpcesk.polychaos import InputScaling, enumerate_basis


def linear_trend(dim=1, lo=0.0, hi=1.0):
    return TrendModel(TrendKind.FULL_PCE, enumerate_basis(dim, 1, 1.0), InputScaling([lo] * dim, [hi] * dim))


def dense_uk(points, y, theta, f, x, fx):
    """Universal Kriging straight from dense inverses."""
    r = np.exp(-(((points[:, None, :] - points[None, :, :]) ** 2) @ theta))
    ri = np.linalg.inv(r)
    beta = np.linalg.inv(f.T @ ri @ f) @ f.T @ ri @ y
    resid = y - f @ beta
    sigma2 = resid @ ri @ resid / y.size
    rx = np.exp(-(((x[:, None, :] - points[None, :, :]) ** 2) @ theta))
    mean = fx @ beta + rx @ ri @ resid
    u = f.T @ ri @ rx.T - fx.T
    mse = sigma2 * (1 - np.einsum("ij,jk,ik->i", rx, ri, rx) + np.einsum("ji,jk,ki->i", u, np.linalg.inv(f.T @ ri @ f), u))
    return beta, sigma2, mean, mse


class TestCorrelation:
    def test_same_point(self):
        assert kriging.gaussian_correlation([0.3, 0.1], [0.3, 0.1], [2.0, 5.0]) == 1.0

    def test_unit_distance(self):
        assert kriging.gaussian_correlation([0.0], [1.0], 1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)

    def test_decays(self):
        assert kriging.gaussian_correlation([0.0], [10.0], 1.0) < 1e-12

    def test_matrix_matches_pairwise(self):
        rng = np.random.default_rng(1)
        a, b, th = rng.uniform(size=(4, 3)), rng.uniform(size=(5, 3)), np.array([0.5, 2.0, 7.0])
        r = kernels.gaussian_correlation_matrix(a, b, th)
        for i in range(4):
            for j in range(5):
                assert r[i, j] == pytest.approx(kriging.gaussian_correlation(a[i], b[j], th), rel=1e-13)


class TestBlue:
    def test_identity_correlation_is_ols(self):
        rng = np.random.default_rng(2)
        f = rng.normal(size=(12, 3))
        y = rng.normal(size=12)
        beta, _ = blue_estimates(f, np.eye(12), y)
        np.testing.assert_allclose(beta, np.linalg.lstsq(f, y, rcond=None)[0], rtol=1e-10)

    def test_exact_trend(self):
        rng = np.random.default_rng(3)
        f = rng.normal(size=(10, 3))
        b_true = np.array([1.0, -2.0, 0.5])
        beta, s2 = blue_estimates(f, np.eye(10), f @ b_true)
        np.testing.assert_allclose(beta, b_true, atol=1e-10)
        assert s2 == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_dense_inverse(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(15, 15))
        r = a @ a.T + 15 * np.eye(15)
        f = rng.normal(size=(15, 4))
        y = rng.normal(size=15)
        beta, s2 = blue_estimates(f, np.linalg.cholesky(r), y)
        ri = np.linalg.inv(r)
        want = np.linalg.solve(f.T @ ri @ f, f.T @ ri @ y)
        np.testing.assert_allclose(beta, want, rtol=1e-8)
        assert s2 == pytest.approx((y - f @ want) @ ri @ (y - f @ want) / 15, rel=1e-8)


class TestPredict:
    def test_dense_oracle_hand_instance(self):
        pts = np.array([[0.0], [0.2], [0.45], [0.7], [1.0]])
        y = np.array([0.3, -0.1, 0.8, 1.1, 0.4])
        theta = np.array([4.0])
        trend = linear_trend()
        model = kriging_at(trend, pts, y, theta, nugget=0.0)
        x = np.linspace(0, 1, 11)[:, None]
        beta, s2, mean, mse = dense_uk(pts, y, theta, trend.matrix(pts), x, trend.matrix(x))
        np.testing.assert_allclose(model.beta, beta, rtol=1e-10)
        assert model.params.sigma2 == pytest.approx(s2, rel=1e-10)
        pred = predict_kriging(model, x)
        np.testing.assert_allclose(pred.mean, mean, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(pred.mse, np.maximum(mse, 0), rtol=1e-8, atol=1e-10 * s2)

    def test_interpolates_design(self):
        rng = np.random.default_rng(4)
        pts = rng.uniform(size=(12, 2))
        y = np.sin(4 * pts[:, 0]) + pts[:, 1] ** 2
        model = kriging_at(TrendModel.constant(2), pts, y, [3.0, 3.0], nugget=0.0)
        pred = model.predict(pts)
        np.testing.assert_allclose(pred.mean, y, atol=1e-8)
        assert np.all(pred.mse <= 1e-8 * model.params.sigma2)

    def test_far_away_reverts_to_trend(self):
        pts = np.linspace(0, 1, 6)[:, None]
        y = np.cos(3 * pts[:, 0])
        trend = linear_trend()
        model = kriging_at(trend, pts, y, [10.0], nugget=0.0)
        x = np.array([[50.0]])
        pred = model.predict(x)
        assert pred.mean[0] == pytest.approx((trend.matrix(x) @ model.beta)[0], rel=1e-12)
        assert pred.mse[0] >= model.params.sigma2

    def test_ci95(self):
        pts = np.linspace(0, 1, 5)[:, None]
        model = kriging_at(TrendModel.constant(1), pts, pts[:, 0] ** 2, [5.0])
        p = model.predict(np.array([[0.33]]))
        lo, hi = p.ci95
        assert lo[0] < p.mean[0] < hi[0]
        assert hi[0] - p.mean[0] == pytest.approx(1.959964 * math.sqrt(p.mse[0]))

    def test_wrong_dimension(self):
        model = kriging_at(TrendModel.constant(2), np.random.default_rng(0).uniform(size=(5, 2)), np.arange(5.0), [1, 1])
        with pytest.raises(ValueError):
            model.predict(np.zeros((3, 3)))


class TestFit:
    def test_constant_response(self):
        pts = np.linspace(0, 1, 8)[:, None]
        model = fit_kriging(TrendModel.constant(1), pts, np.full(8, 2.0), GaConfig(generations=10))
        assert model.params.sigma2 < 1e-10
        np.testing.assert_allclose(model.predict(np.linspace(0, 1, 21)).mean, 2.0, atol=1e-8)

    def test_objective_at_optimum_beats_probes(self):
        rng = np.random.default_rng(5)
        pts = rng.uniform(size=(15, 2))
        y = np.sin(5 * pts[:, 0]) * np.cos(2 * pts[:, 1])
        trend = TrendModel.constant(2, InputScaling([0, 0], [1, 1]))
        model = fit_kriging(trend, pts, y, GaConfig(seed=1))
        best = kriging.concentrated_objective(model.params.theta, trend, pts, y)
        assert best == pytest.approx(model.objective)
        for g in rng.uniform(-3, 3, size=(32, 2)):
            assert best <= kriging.concentrated_objective(10.0**g, trend, pts, y) + 1e-9

    @pytest.mark.slow
    def test_recovers_gp_length_scale(self):
        estimates = []
        x = np.linspace(0, 1, 40)[:, None]
        r = kernels.gaussian_correlation_matrix(x, x, np.array([5.0]))
        chol, _ = cholesky_with_nugget(r, 1e-10)
        for seed in range(9):
            y = chol @ np.random.default_rng(seed).standard_normal(40)
            m = fit_kriging(TrendModel.constant(1, InputScaling([0], [1])), x, y, GaConfig(seed=seed, generations=40))
            estimates.append(m.params.theta[0])
        assert 2.5 <= np.median(estimates) <= 10.0

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            fit_kriging(linear_trend(), np.array([[0.0], [1.0]]), np.array([1.0, 2.0]))
