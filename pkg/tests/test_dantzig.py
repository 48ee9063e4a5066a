"""Linear program core and the L1 selector built on it."""

import numpy as np
import pytest
from scipy.optimize import linprog

from screenkit.core import Coding, Design, TermSet, build_model_matrix
from screenkit.dantzig import dantzig_path, dantzig_solve, gauss_dantzig
from screenkit.errors import InfeasibleError
from screenkit.factorial import plackett_burman
from screenkit.simplex import solve_lp


def soft_threshold(v: np.ndarray, s: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - s, 0.0)


class TestSimplex:
    def test_basic_maximization(self):
        res = solve_lp(np.array([-1.0, -1.0]), np.array([[1.0, 1.0]]), np.array([1.0]))
        assert res.fun == pytest.approx(-1.0)

    def test_negative_rhs_phase1(self):
        # x >= 2 written as -x <= -2, minimize x
        res = solve_lp(np.array([1.0]), np.array([[-1.0]]), np.array([-2.0]))
        assert res.x[0] == pytest.approx(2.0)

    def test_infeasible_detected(self):
        # x <= 1 and x >= 3
        A = np.array([[1.0], [-1.0]])
        b = np.array([1.0, -3.0])
        with pytest.raises(InfeasibleError):
            solve_lp(np.array([0.0]), A, b)

    def test_degenerate_lp_terminates(self):
        # classic cycling-prone instance (degenerate pivots)
        c = np.array([-0.75, 150.0, -0.02, 6.0])
        A = np.array([
            [0.25, -60.0, -0.04, 9.0],
            [0.5, -90.0, -0.02, 3.0],
            [0.0, 0.0, 1.0, 0.0],
        ])
        b = np.array([0.0, 0.0, 1.0])
        res = solve_lp(c, A, b)
        assert res.fun == pytest.approx(-0.05)

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_reference_solver(self, seed):
        rng = np.random.default_rng(seed)
        m, n = rng.integers(3, 9), rng.integers(2, 7)
        A = rng.standard_normal((m, n))
        b = rng.standard_normal(m) + 1.0
        c = rng.standard_normal(n)
        ref = linprog(c, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
        if not ref.success:
            if ref.status == 2:
                with pytest.raises(InfeasibleError):
                    solve_lp(c, A, b)
            return
        if ref.status == 3:
            return  # unbounded
        res = solve_lp(c, A, b)
        assert res.fun == pytest.approx(ref.fun, abs=1e-7)


class TestDantzigSolve:
    def test_large_bound_gives_zero(self):
        rng = np.random.default_rng(1)
        H = rng.standard_normal((10, 4))
        y = rng.standard_normal(10)
        s = float(np.max(np.abs(H.T @ y)))
        beta = dantzig_solve(H, y, s)
        assert np.allclose(beta, 0.0, atol=1e-9)

    def test_negative_bound_rejected(self):
        with pytest.raises(InfeasibleError):
            dantzig_solve(np.eye(3), np.ones(3), -0.5)

    @pytest.mark.parametrize("seed", range(8))
    def test_soft_threshold_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n, p = 14, 6
        Q, _ = np.linalg.qr(rng.standard_normal((n, p)))
        y = rng.standard_normal(n)
        corr = Q.T @ y
        for s in (0.1, 0.5, 1.0):
            beta = dantzig_solve(Q, y, s)
            assert np.allclose(beta, soft_threshold(corr, s), atol=1e-6)

    def test_grid_oracle_small_instance(self):
        rng = np.random.default_rng(5)
        n, p = 8, 3
        H = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        s = 0.8 * float(np.max(np.abs(H.T @ y)))
        beta = dantzig_solve(H, y, s)
        # dense grid search around the solution
        grid = np.linspace(-1.5, 1.5, 61)
        best, best_l1 = None, np.inf
        G, c = H.T @ H, H.T @ y
        for b0 in grid:
            for b1 in grid:
                for b2 in grid:
                    b = np.array([b0, b1, b2])
                    if np.max(np.abs(c - G @ b)) <= s + 1e-9:
                        l1 = float(np.abs(b).sum())
                        if l1 < best_l1:
                            best, best_l1 = b, l1
        assert best is not None
        assert float(np.abs(beta).sum()) <= best_l1 + 1e-3

    def test_square_invertible_zero_bound(self):
        rng = np.random.default_rng(9)
        H = rng.standard_normal((4, 4)) + 4 * np.eye(4)
        y = rng.standard_normal(4)
        beta = dantzig_solve(H, y, 0.0)
        assert np.allclose(beta, np.linalg.solve(H, y), atol=1e-7)


class TestDantzigPath:
    def test_first_point_zero_and_feasibility(self):
        rng = np.random.default_rng(2)
        H = rng.standard_normal((12, 5))
        y = rng.standard_normal(12)
        path = dantzig_path(H, y)
        assert np.allclose(path.coefficients[0], 0.0, atol=1e-9)
        assert np.all(path.feasibility <= path.s_grid + 1e-6)
        # L1 norm weakly increases as the bound loosens downward
        l1 = path.l1_norms()
        assert np.all(np.diff(l1) >= -1e-7)

    def test_orthogonal_support_monotone(self):
        pb = plackett_burman(12)
        H = build_model_matrix(pb, TermSet.main_effects(11))
        beta_true = np.zeros(12)
        beta_true[[1, 3]] = (4.0, 2.0)
        y = H.H @ beta_true
        path = dantzig_path(H.H, y)
        supports = [frozenset(np.flatnonzero(np.abs(b) > 1e-8)) for b in path.coefficients]
        for a, b in zip(supports, supports[1:]):
            assert a <= b

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        H = rng.standard_normal((10, 4))
        y = rng.standard_normal(10)
        p1 = dantzig_path(H, y)
        p2 = dantzig_path(H, y)
        assert np.array_equal(p1.coefficients, p2.coefficients)


class TestGaussDantzig:
    def _design(self, n, d, seed):
        from screenkit.ssd import search_ssd
        return search_ssd(n, d, criterion="es2", seed=seed, restarts=4, moves=4000)

    def test_noiseless_single_effect(self):
        design = self._design(16, 20, seed=0)
        H = build_model_matrix(design, TermSet.main_effects(20))
        y = 3.0 * design.runs[:, 0]
        res = gauss_dantzig(H, y, truth={1})
        assert res.outcome.selected == {1}

    def test_threshold_drops_small_refits(self):
        design = self._design(16, 20, seed=1)
        H = build_model_matrix(design, TermSet.main_effects(20))
        y = 5.0 * design.runs[:, 2] + 0.01 * design.runs[:, 7]
        res_all = gauss_dantzig(H, y, threshold=0.0)
        res_cut = gauss_dantzig(H, y, threshold=1.0)
        assert 3 in res_all.outcome.selected
        assert res_cut.outcome.selected <= res_all.outcome.selected
        assert 8 not in res_cut.outcome.selected

    def test_interaction_terms_mark_both_variables(self):
        rng = np.random.default_rng(4)
        runs = np.where(rng.random((12, 4)) < 0.5, 1.0, -1.0)
        design = Design(runs, Coding.TWO_LEVEL)
        H = build_model_matrix(design, TermSet.with_two_fi(4))
        y = 4.0 * runs[:, 0] * runs[:, 1]
        res = gauss_dantzig(H, y)
        assert {1, 2} <= res.outcome.selected

    def test_zero_response_empty_selection(self):
        design = self._design(16, 20, seed=2)
        H = build_model_matrix(design, TermSet.main_effects(20))
        res = gauss_dantzig(H, np.zeros(16))
        assert res.outcome.selected == set()
        assert res.empty_path

    def test_criterion_excludes_overfull_supports(self):
        # with n = 8 and many candidate terms, supports with n - k - 1 <= 0
        # must be dropped rather than scored
        rng = np.random.default_rng(8)
        runs = np.where(rng.random((8, 10)) < 0.5, 1.0, -1.0)
        design = Design(runs, Coding.TWO_LEVEL)
        H = build_model_matrix(design, TermSet.main_effects(10))
        y = rng.standard_normal(8)
        res = gauss_dantzig(H, y)
        assert len(res.refit_terms) + 1 < 8 - 1
