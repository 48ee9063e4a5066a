"""Benchmark functions, the automatic EE rule and the comparison driver."""

import json
from itertools import combinations

import numpy as np
import pytest

from screenkit.bench import (
    DEFAULT_COEFF_SEED, MorrisBenchmark, benchmark_function, ee_auto_select,
    run_benchmark, welch_function, welch_function_modified,
)
from screenkit.ee import ee_indices


class TestWelchFunction:
    def test_zero_input(self):
        assert welch_function(np.zeros(20)) == pytest.approx(0.0)

    def test_single_x5(self):
        x = np.zeros(20)
        x[4] = 1.0
        assert welch_function(x) == pytest.approx(0.5)

    def test_single_x19(self):
        x = np.zeros(20)
        x[18] = 1.0
        assert welch_function(x) == pytest.approx(40 * 0.125 - 2.5)  # 2.5

    def test_full_formula_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.uniform(-1, 1, 20)
            w = 0.5 * x
            expected = (5 * w[11] / (1 + w[0]) + 5 * (w[3] - w[19]) ** 2 + w[4]
                        + 40 * w[18] ** 3 - 5 * w[18] + 0.05 * w[1] + 0.08 * w[2]
                        - 0.03 * w[5] + 0.03 * w[6] - 0.09 * w[8] - 0.01 * w[9]
                        - 0.07 * w[10] + 0.25 * w[12] ** 2 - 0.04 * w[13]
                        + 0.06 * w[14] - 0.01 * w[16] - 0.03 * w[17])
            assert welch_function(x) == pytest.approx(expected, rel=1e-12)

    def test_modified_variant_differs_only_in_square_terms(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(-1, 1, 20)
        w = 0.5 * x
        diff = welch_function_modified(x) - welch_function(x)
        expected = 5 * w[3] ** 2 - 5 * w[19] ** 2 - 5 * (w[3] - w[19]) ** 2
        assert diff == pytest.approx(expected, rel=1e-9, abs=1e-12)


class TestMorrisBenchmark:
    def _reference_eval(self, fn: MorrisBenchmark, x: np.ndarray) -> float:
        # independent nested-sum evaluation of the polynomial
        v = x.copy()
        for i in (3, 5, 7):
            v[i - 1] = 11 * (x[i - 1] + 1) / (5 * x[i - 1] + 6) - 1
        y = 0.0
        for j in range(20):
            y += fn.beta1[j] * v[j]
        for j, k in combinations(range(20), 2):
            y += fn.beta2[j, k] * v[j] * v[k]
        for (j, k, l), b in fn.triples.items():
            y += b * v[j] * v[k] * v[l]
        for (j, k, l, u), b in fn.quads.items():
            y += b * v[j] * v[k] * v[l] * v[u]
        return y

    def test_zero_input_against_direct_evaluation(self):
        fn = MorrisBenchmark(DEFAULT_COEFF_SEED)
        x = np.zeros(20)
        assert fn(x) == pytest.approx(self._reference_eval(fn, x), rel=1e-12)
        # warped inputs contribute 5/6 at zero
        v0 = 11 / 6 - 1
        assert v0 == pytest.approx(5 / 6)

    def test_warp_preserves_endpoints(self):
        fn = MorrisBenchmark(0)
        for val in (-1.0, 1.0):
            x = np.full(20, val)
            v = 11 * (val + 1) / (5 * val + 6) - 1
            assert v == pytest.approx(val)

    def test_random_points_against_reference(self):
        fn = MorrisBenchmark(7)
        rng = np.random.default_rng(2)
        for _ in range(10):
            x = rng.uniform(-1, 1, 20)
            assert fn(x) == pytest.approx(self._reference_eval(fn, x), rel=1e-10)

    def test_fixed_coefficient_blocks(self):
        fn = MorrisBenchmark(3)
        assert np.all(fn.beta1[:10] == 20.0)
        for j, k in combinations(range(6), 2):
            assert fn.beta2[j, k] == -15.0
        assert fn.quads == {(0, 1, 2, 3): 5.0}
        assert all(b == -10.0 for b in fn.triples.values())
        assert len(fn.triples) == 10

    def test_seeded_reproducibility(self):
        a = MorrisBenchmark(11)
        b = MorrisBenchmark(11)
        x = np.linspace(-1, 1, 20)
        assert a(x) == b(x)

    def test_cancel_variant_triple_cover(self):
        fn = MorrisBenchmark(0, variant="cancel")
        counts = {i: 0 for i in range(5, 10)}
        for t in fn.triples:
            for i in t:
                counts[i] += 1
        # each of x7..x10 in exactly four triples: odd contrasts cancel
        assert counts == {5: 2, 6: 4, 7: 4, 8: 4, 9: 4}
        assert all(b == -5.0 for b in fn.triples.values())


class TestEEAutoSelect:
    def _indices(self, mu_star, sigma):
        eff = np.zeros((2, len(mu_star)))
        idx = ee_indices(eff)
        object.__setattr__(idx, "mu_star", np.asarray(mu_star, dtype=float))
        object.__setattr__(idx, "sigma", np.asarray(sigma, dtype=float))
        return idx

    def test_dominant_singleton(self):
        idx = self._indices([5.0, 0.0, 0.0], [0.0, 0.0, 0.0])
        assert ee_auto_select(idx) == {1}

    def test_all_equal_selects_all(self):
        idx = self._indices([2.0, 2.0, 2.0], [1.0, 1.0, 1.0])
        assert ee_auto_select(idx) == {1, 2, 3}

    def test_sigma_channel_counts(self):
        idx = self._indices([5.0, 0.0, 0.0], [0.0, 4.0, 0.0])
        assert ee_auto_select(idx) == {1, 2}

    def test_all_zero_selects_nothing(self):
        idx = self._indices([0.0, 0.0], [0.0, 0.0])
        assert ee_auto_select(idx) == set()


class TestRunBenchmark:
    def test_invalid_grid_rejected(self):
        with pytest.raises(ValueError) as err:
            run_benchmark("ee", 1, 50)
        assert "42" in str(err.value)
        with pytest.raises(ValueError):
            run_benchmark("nope", 1, 42)

    def test_sfrd_example1_thresholds(self):
        rep = run_benchmark("sfrd", 1, 42, threshold=0.01)
        assert rep.metrics.sensitivity == 1.0 and rep.metrics.type_i == 0.0
        rep = run_benchmark("sfrd", 1, 42, threshold=0.05)
        assert rep.metrics.sensitivity == pytest.approx(5 / 6)
        assert rep.metrics.type_i == 0.0

    def test_oracle_call_audit(self):
        rep = run_benchmark("sfrd", 1, 42)
        assert rep.oracle_calls == rep.design.n == 42
        rep = run_benchmark("ee", 1, 84, seed=0)
        assert rep.oracle_calls == 84

    def test_ee_artifacts(self, tmp_path):
        rep = run_benchmark("ee", 2, 84, seed=0, out_dir=tmp_path)
        assert (tmp_path / "design.csv").exists()
        assert (tmp_path / "y.csv").exists()
        assert (tmp_path / "ee_scatter.csv").exists()
        assert (tmp_path / "ee_scatter.svg").exists()
        doc = json.loads((tmp_path / "report.json").read_text())
        assert doc["method"] == "ee"
        assert doc["metrics"]["sensitivity"] == 1.0
        assert doc["oracle_calls"] == 84

    def test_dsd_mains_example2_selects_nothing(self):
        rep = run_benchmark("dsd", 2, 41, dsd_analysis="mains")
        assert rep.outcome.selected == set()

    def test_dsd_mains_artifacts(self, tmp_path):
        rep = run_benchmark("dsd", 1, 41, dsd_analysis="mains", out_dir=tmp_path)
        assert rep.outcome.selected == {12, 19}
        hn = (tmp_path / "half_normal.csv").read_text().splitlines()
        assert hn[0] == "quantile,abs_estimate"
        assert len(hn) == 21


class TestModifiedFunctionRegressions:
    """Corner-contrast blind spots: variants the share analysis must miss
    while the trajectory analysis keeps finding them."""

    def _sfrd_selection(self, example):
        from screenkit.ee import cotter_contrasts, cotter_sensitivity
        from screenkit.factorial import sfrd
        bench = benchmark_function(example)
        X = sfrd(20).runs
        y = np.array([bench.oracle(x) for x in X])
        return cotter_sensitivity(cotter_contrasts(y, 20), 0.01).selected

    def _ee_selection(self, example, seed):
        from screenkit.ee import elementary_effects
        from screenkit.spacefill import morris_plan
        bench = benchmark_function(example)
        plan = morris_plan(20, 4, f=4, seed=seed)
        y = np.array([bench.oracle(2 * r - 1) for r in plan.design.runs])
        return ee_auto_select(ee_indices(elementary_effects(plan, y)))

    def test_modified_example1_square_split(self):
        base = self._sfrd_selection(1)
        assert {4, 20} <= base
        modified = self._sfrd_selection("1m")
        assert not ({4, 20} & modified)
        # the trajectory method keeps flagging both variables
        hits = sum({4, 20} <= self._ee_selection("1m", s) for s in range(5))
        assert hits >= 4

    def test_modified_example2_triple_cancellation(self):
        base = self._sfrd_selection(2)
        assert {7, 8, 9, 10} <= base
        modified = self._sfrd_selection("2m")
        assert not ({7, 8, 9, 10} & modified)
        assert 6 in modified  # x6 keeps its pair-term contrast
        hits = sum({7, 8, 9, 10} <= self._ee_selection("2m", s) for s in range(5))
        assert hits >= 4
