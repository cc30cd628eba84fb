import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from larpcesk.exceptions import OptimizationError
from larpcesk.optimize import GaConfig, ga_maximize


def quadratic(center):
    center = np.asarray(center)
    return lambda g: -float(np.sum((g - center) ** 2 * np.arange(1, center.size + 1)))


BOX = [(-5.0, 5.0), (-2.0, 8.0)]


class TestGaMaximize:
    def test_concave_quadratic(self):
        res = ga_maximize(quadratic([1.3, 2.7]), GaConfig(bounds=BOX, seed=4))
        np.testing.assert_allclose(res.best_genes, [1.3, 2.7], atol=1e-2)

    def test_history_monotone(self):
        res = ga_maximize(lambda g: math.sin(3 * g[0]) + math.cos(2 * g[1]), GaConfig(bounds=BOX, seed=1))
        h = np.asarray(res.history)
        assert np.all(np.diff(h) >= 0)
        assert res.best_value >= h[-1]

    def test_seed_determinism(self):
        cfg = GaConfig(bounds=BOX, seed=123)
        a = ga_maximize(quadratic([0.5, 0.5]), cfg)
        b = ga_maximize(quadratic([0.5, 0.5]), cfg)
        assert np.array_equal(a.best_genes, b.best_genes)
        assert a.history == b.history and a.evaluations == b.evaluations

    def test_constant_objective(self):
        res = ga_maximize(lambda g: 1.0, GaConfig(bounds=BOX, seed=0))
        assert res.best_value == 1.0
        assert set(res.history) == {1.0}

    def test_boundary_optimum_stays_in_box(self):
        res = ga_maximize(lambda g: float(g.sum()), GaConfig(bounds=BOX, seed=2))
        assert np.all(res.best_genes <= [5.0, 8.0]) and np.all(res.best_genes >= [-5.0, -2.0])
        np.testing.assert_allclose(res.best_genes, [5.0, 8.0], atol=1e-2)

    def test_infeasible_regions_scored_out(self):
        def obj(g):
            if g[0] < 0:
                return None
            return -abs(g[0] - 1.0) if g[1] < 5 else math.nan

        res = ga_maximize(obj, GaConfig(bounds=BOX, seed=3))
        assert res.best_genes[0] >= 0 and res.best_genes[1] < 5
        assert res.best_value == pytest.approx(0.0, abs=1e-2)

    def test_all_infeasible_raises(self):
        with pytest.raises(OptimizationError):
            ga_maximize(lambda g: -math.inf, GaConfig(bounds=BOX, population=6, generations=3))

    def test_needs_bounds(self):
        with pytest.raises(ValueError):
            ga_maximize(quadratic([0.0]), GaConfig())

    @pytest.mark.parametrize(
        "kwargs", [{"population": 2}, {"crossover_rate": 1.5}, {"elitism": 0}, {"bounds": [(1.0, 0.0)]}]
    )
    def test_bad_config(self, kwargs):
        with pytest.raises(ValueError):
            GaConfig(**kwargs)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**31), st.integers(1, 4))
    def test_property_contract(self, seed, dim):
        bounds = [(-1.0, 2.0)] * dim
        seen = []

        def obj(g):
            seen.append(g.copy())
            return -float(np.sum(np.abs(g - 0.3)))

        res = ga_maximize(obj, GaConfig(bounds=bounds, seed=seed, generations=15, population=12))
        allg = np.array(seen)
        assert np.all(allg >= -1.0) and np.all(allg <= 2.0)
        assert np.all(np.diff(res.history) >= 0)
        assert res.best_value == max(obj(g) for g in [res.best_genes])
