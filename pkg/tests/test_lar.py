import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from larpcesk import lar, polychaos
from larpcesk.polychaos import PceBasis, enumerate_basis


def random_instance(seed, k=20, m=2, p=3):
    rng = np.random.default_rng(seed)
    basis = enumerate_basis(m, p, 1.0)
    pts = rng.uniform(-1, 1, (k, m))
    y = rng.normal(size=k) + np.sin(2 * pts[:, 0])
    return basis, pts, y


def correlation_spread(path, step):
    c = np.abs(path.correlations(step)[path.active_positions(step)])
    return float(c.max() - c.min())


class TestLarPath:
    def test_first_entry_is_most_correlated(self):
        # Legendre columns at Gauss nodes are orthogonal after centring
        x, _ = np.polynomial.legendre.leggauss(8)
        basis = enumerate_basis(1, 5, 1.0)
        rng = np.random.default_rng(2)
        y = rng.normal(size=8)
        path = lar.lar_path(basis, x[:, None], y)
        psi = path.design
        assert path.steps[0].active[0] == path.race_columns[np.argmax(np.abs(psi.T @ (y - y.mean())))]

    def test_proportional_response(self):
        basis, pts, _ = random_instance(0)
        y = 3.0 * polychaos.information_matrix(basis, pts)[:, 4]
        path = lar.lar_path(basis, pts, y)
        assert path.steps[0].active == (4,)
        model = polychaos.fit_ols(basis.subset([0, 4]), pts, y)
        np.testing.assert_allclose(model.predict(pts), y, atol=1e-10)

    def test_equiangular_on_synthetic(self):
        rng = np.random.default_rng(5)
        basis = enumerate_basis(1, 8, 1.0)
        pts = rng.uniform(-1, 1, (20, 1))
        path = lar.lar_path(basis, pts, rng.normal(size=20))
        for s in range(len(path.steps)):
            assert correlation_spread(path, s) <= 1e-8

    def test_step_limit_and_nesting(self):
        basis, pts, y = random_instance(1, k=6, p=4)
        path = lar.lar_path(basis, pts, y)
        assert len(path.steps) <= min(basis.size - 1, 6 - 1)
        for a, b in zip(path.steps, path.steps[1:]):
            assert b.active[: len(a.active)] == a.active
            assert len(b.active) == len(a.active) + 1

    def test_constant_column_excluded(self):
        basis, pts, y = random_instance(2)
        path = lar.lar_path(basis, pts, y)
        assert 0 in path.excluded and 0 not in path.race_columns

    def test_full_path_reaches_least_squares(self):
        basis, pts, y = random_instance(3, k=40, p=2)
        path = lar.lar_path(basis, pts, y)
        assert len(path.steps) == basis.size - 1
        ols = polychaos.fit_ols(basis, pts, y)
        np.testing.assert_allclose(path.steps[-1].coefficients, ols.coefficients, rtol=1e-8, atol=1e-10)

    def test_empty_candidates(self):
        with pytest.raises(ValueError):
            lar.lar_path(PceBasis(np.zeros((0, 1), dtype=int), "legendre", 0, 1.0), np.zeros((3, 1)), np.ones(3))

    def test_too_few_points(self):
        basis, _, _ = random_instance(0)
        with pytest.raises(ValueError):
            lar.lar_path(basis, np.zeros((1, 2)), np.ones(1))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(8, 30))
    def test_property_equiangular_and_nested(self, seed, k):
        basis, pts, y = random_instance(seed, k=k, p=3)
        path = lar.lar_path(basis, pts, y)
        for s, step in enumerate(path.steps):
            assert correlation_spread(path, s) <= 1e-8 * max(1.0, np.linalg.norm(y))
            if s:
                assert step.active[:-1] == path.steps[s - 1].active


class TestSelectSparseBasis:
    def test_recovers_sparse_truth(self):
        rng = np.random.default_rng(7)
        cand = enumerate_basis(2, 5, 1.0)
        assert cand.size >= 20
        pts = rng.uniform(-1, 1, (60, 2))
        psi = polychaos.information_matrix(cand, pts)
        true_rows = [0, 3, 11]
        y = psi[:, true_rows] @ np.array([1.0, 2.0, -1.5]) + 1e-6 * rng.normal(size=60)
        basis, model, path = lar.select_sparse_basis(cand, pts, y)
        chosen = set(basis.as_tuples())
        assert {cand.as_tuples()[r] for r in true_rows} <= chosen
        assert model.loo_error <= 1e-9

    def test_constant_response(self):
        cand = enumerate_basis(2, 3, 1.0)
        pts = np.random.default_rng(0).uniform(-1, 1, (10, 2))
        basis, model, _ = lar.select_sparse_basis(cand, pts, np.full(10, 2.5))
        assert basis.as_tuples() == [(0, 0)]
        np.testing.assert_allclose(model.predict(pts), 2.5)

    def test_constant_added_when_missing(self):
        cand = enumerate_basis(1, 4, 1.0).subset([1, 2, 3, 4])
        pts = np.linspace(-1, 1, 15)[:, None]
        basis, _, _ = lar.select_sparse_basis(cand, pts, 5 + pts[:, 0])
        assert (0,) in basis.as_tuples()

    @pytest.mark.parametrize("criterion", ["plain", "corrected"])
    def test_selected_step_minimises_score(self, criterion):
        basis, pts, y = random_instance(4, k=30, p=4)
        _, model, path = lar.select_sparse_basis(basis, pts, y, criterion=criterion)
        scores = [s.score for s in path.steps]
        if path.selected is not None:
            assert scores[path.selected] == min(scores)
            assert path.steps[path.selected].loo_error == pytest.approx(model.loo_error)

    def test_plain_score_equals_loo(self):
        basis, pts, y = random_instance(5, k=30)
        _, _, path = lar.select_sparse_basis(basis, pts, y, criterion="plain")
        for s in path.steps:
            assert s.score == s.loo_error

    def test_corrected_is_no_larger_than_plain(self):
        sizes = {}
        for crit in ("plain", "corrected"):
            rng = np.random.default_rng(9)
            cand = enumerate_basis(2, 8, 0.8)
            pts = rng.uniform(-1, 1, (64, 2))
            y = np.sin(3 * pts[:, 0]) + 0.3 * rng.normal(size=64)
            sizes[crit] = lar.select_sparse_basis(cand, pts, y, criterion=crit)[0].size
        assert sizes["corrected"] <= sizes["plain"]

    def test_refit_is_least_squares(self):
        basis, pts, y = random_instance(6, k=30)
        sel, model, _ = lar.select_sparse_basis(basis, pts, y)
        psi = polychaos.information_matrix(sel, pts)
        assert np.linalg.norm(psi.T @ (y - psi @ model.coefficients)) <= 1e-8 * np.linalg.norm(y)

    def test_unknown_criterion(self):
        basis, pts, y = random_instance(0)
        with pytest.raises(ValueError):
            lar.select_sparse_basis(basis, pts, y, criterion="aic")

    def test_degenerate_steps_fall_back_to_constant(self):
        # two points: every non-constant refit interpolates with leverage 1
        cand = enumerate_basis(1, 3, 1.0)
        basis, model, path = lar.select_sparse_basis(cand, np.array([[0.2], [0.7]]), np.array([1.0, 3.0]))
        assert path.selected is None
        assert basis.as_tuples() == [(0,)]
        assert all(s.loo_error == np.inf for s in path.steps)

    def test_path_timing(self):
        import time

        rng = np.random.default_rng(0)
        cand = enumerate_basis(3, 9, 1.0)
        assert cand.size == 220
        pts = rng.uniform(-1, 1, (1000, 3))
        t0 = time.perf_counter()
        path = lar.lar_path(cand, pts, rng.normal(size=1000))
        assert time.perf_counter() - t0 < 5.0
        assert len(path.steps) == cand.size - 1
