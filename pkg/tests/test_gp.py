"""Gaussian-process likelihood, stepwise release and the Bayesian selector."""

import numpy as np
import pytest

from screenkit.core import Coding, Design
from screenkit.errors import ConditioningError
from screenkit.gp import NUGGET_START, fit_gp, gp_loglik, rdvs, sgpvs
from screenkit.spacefill import lhs_random, to_symmetric


def _design(n, d, seed=0):
    return to_symmetric(lhs_random(n, d, seed=seed))


class TestGpLoglik:
    def test_three_point_hand_oracle(self):
        runs = np.array([[-1.0], [0.0], [1.0]])
        design = Design(runs, Coding.SYMMETRIC)
        y = np.array([1.0, 2.0, 0.5])
        theta, nugget = np.array([0.7]), 1e-8
        # direct dense evaluation of the profiled likelihood
        R = np.exp(-theta[0] * np.abs(runs - runs.T) ** 2) + nugget * np.eye(3)
        Ri = np.linalg.inv(R)
        one = np.ones(3)
        beta0 = (one @ Ri @ y) / (one @ Ri @ one)
        r = y - beta0
        sigma2 = (r @ Ri @ r) / 3
        expected = (-1.5 * np.log(sigma2) - 0.5 * np.log(np.linalg.det(R))
                    - 1.5 * (np.log(2 * np.pi) + 1))
        assert gp_loglik(design, y, theta, alpha=2.0) == pytest.approx(expected, rel=1e-9)

    def test_large_theta_independence_limit(self):
        design = _design(12, 3, seed=1)
        rng = np.random.default_rng(2)
        y = rng.standard_normal(12)
        n = 12
        ll = gp_loglik(design, y, np.full(3, 1e6))
        s2 = y.var()  # MLE variance (divisor n)
        expected = -0.5 * n * np.log(s2) - 0.5 * n * (np.log(2 * np.pi) + 1)
        assert ll == pytest.approx(expected, rel=1e-6)

    def test_permutation_invariance(self):
        design = _design(10, 2, seed=3)
        rng = np.random.default_rng(4)
        y = rng.standard_normal(10)
        perm = rng.permutation(10)
        d2 = Design(design.runs[perm], Coding.SYMMETRIC)
        theta = np.array([0.5, 1.5])
        assert gp_loglik(design, y, theta) == pytest.approx(
            gp_loglik(d2, y[perm], theta), rel=1e-10)

    def test_correlation_matrix_properties(self):
        design = _design(9, 2, seed=5)
        fit = fit_gp(design, np.arange(9.0), np.array([0.4, 0.9]))
        assert fit.nugget == NUGGET_START
        X = design.runs
        R = np.exp(-((X[:, None, :] - X[None, :, :]) ** 2 * np.array([0.4, 0.9])).sum(-1))
        assert np.allclose(np.diag(R), 1.0)
        assert np.all((R > 0) & (R <= 1))
        # monotone decreasing in each roughness parameter off the diagonal
        R2 = np.exp(-((X[:, None, :] - X[None, :, :]) ** 2 * np.array([0.8, 0.9])).sum(-1))
        off = ~np.eye(9, dtype=bool)
        assert np.all(R2[off] <= R[off] + 1e-15)

    def test_invalid_inputs(self):
        design = _design(5, 2)
        with pytest.raises(ValueError):
            gp_loglik(design, np.zeros(5), np.array([-0.1, 0.2]))
        with pytest.raises(ValueError):
            gp_loglik(design, np.zeros(5), np.array([0.1, 0.2]), alpha=2.5)
        with pytest.raises(ValueError):
            gp_loglik(design, np.zeros(4), np.array([0.1, 0.2]))

    def test_tied_relabelling_invariance(self):
        # with all roughness parameters equal, exchanging variable columns
        # leaves the likelihood unchanged
        design = _design(8, 3, seed=6)
        y = np.sin(design.runs[:, 0]) + design.runs[:, 1]
        swapped = Design(design.runs[:, [1, 0, 2]], Coding.SYMMETRIC)
        theta = np.full(3, 0.8)
        assert gp_loglik(design, y, theta) == pytest.approx(
            gp_loglik(swapped, y, theta), rel=1e-10)


class TestSgpvsSmall:
    def test_constant_response_selects_nothing(self):
        design = _design(10, 3, seed=0)
        res = sgpvs(design, np.ones(10), c=3.0, seed=0)
        assert res.released == ()
        assert res.outcome.selected == set()

    def test_strong_single_variable(self):
        design = _design(25, 4, seed=1)
        y = np.sin(2.5 * design.runs[:, 1]) * 3.0
        res = sgpvs(design, y, c=3.0, seed=1, truth={2})
        assert 2 in res.outcome.selected
        assert res.released[0] == 2

    def test_loglik_path_nondecreasing(self):
        design = _design(20, 4, seed=2)
        y = design.runs[:, 0] ** 2 + 0.5 * design.runs[:, 2]
        res = sgpvs(design, y, c=0.5, seed=2)
        path = np.asarray(res.loglik_path)
        assert np.all(np.diff(path) >= -1e-4)

    def test_c_must_be_positive(self):
        with pytest.raises(ValueError):
            sgpvs(_design(8, 2), np.zeros(8), c=0.0)


class TestRdvsSmall:
    def test_strong_signal_detected(self):
        design = _design(30, 4, seed=3)
        y = 5.0 * np.sin(3.0 * design.runs[:, 0])
        res = rdvs(design, y, b=20, iters=400, burn=100, seed=0, truth={1})
        assert 1 in res.outcome.selected
        assert res.real_medians[0] > res.reference.threshold

    def test_reference_distribution_shape(self):
        design = _design(12, 3, seed=4)
        rng = np.random.default_rng(5)
        y = rng.standard_normal(12)
        res = rdvs(design, y, b=15, iters=200, burn=50, seed=1)
        assert res.reference.medians.shape == (15,)
        assert np.all(res.reference.medians >= 0)
        assert res.reference.threshold >= 0

    def test_parameter_validation(self):
        design = _design(8, 2)
        with pytest.raises(ValueError):
            rdvs(design, np.zeros(8), b=5)
        with pytest.raises(ValueError):
            rdvs(design, np.zeros(8), b=10, percentile=1.5)
        with pytest.raises(ValueError):
            rdvs(design, np.zeros(8), b=10, iters=100, burn=100)

    def test_seeded_determinism(self):
        design = _design(10, 2, seed=6)
        y = design.runs[:, 0] * 2.0
        a = rdvs(design, y, b=12, iters=150, burn=50, seed=42)
        b = rdvs(design, y, b=12, iters=150, burn=50, seed=42)
        assert np.array_equal(a.reference.medians, b.reference.medians)
        assert a.outcome.selected == b.outcome.selected


@pytest.mark.slow
class TestRdvsNullCalibration:
    def test_null_exceedance_rate(self):
        # pure-noise response with everything inert: the share of real
        # variables above the 90th percentile of the reference should sit
        # near 0.10
        rng = np.random.default_rng(2024)
        rates = []
        for rep in range(6):
            design = _design(16, 10, seed=100 + rep)
            y = rng.standard_normal(16)
            res = rdvs(design, y, b=40, iters=500, burn=150, seed=rep)
            above = sum(m > res.reference.threshold for m in res.real_medians)
            rates.append(above / 10)
        assert abs(float(np.mean(rates)) - 0.10) <= 0.07

    def test_reference_seed_stability(self):
        # two independent reference batches should agree in distribution
        design = _design(14, 6, seed=50)
        rng = np.random.default_rng(7)
        y = rng.standard_normal(14)
        r1 = rdvs(design, y, b=40, iters=400, burn=100, seed=11)
        r2 = rdvs(design, y, b=40, iters=400, burn=100, seed=12)
        from scipy.stats import ks_2samp
        stat = ks_2samp(r1.reference.medians, r2.reference.medians).statistic
        assert stat < 0.35
