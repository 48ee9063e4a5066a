"""Factorial design constructions against the printed golden tables."""

import numpy as np
import pytest
from itertools import combinations

from screenkit.core import Coding, TermSet, build_model_matrix
from screenkit.errors import ConstructionError, InvalidGeneratorError, ResourceLimitError
from screenkit.factorial import (
    DSD6_RUNS, GENERATORS_11_IN_16, PB12_RUNS, definitive_screening, foldover,
    full_factorial, hadamard, ofaat, plackett_burman, regular_fraction, sfrd,
)
from tests.test_core import TABLE_2_4_1


class TestFullFactorial:
    def test_d3_matches_printed_columns(self):
        ff = full_factorial(3)
        assert np.array_equal(ff.runs, TABLE_2_4_1[:, :3])

    def test_d1(self):
        assert np.array_equal(full_factorial(1).runs, [[-1.0], [1.0]])

    def test_pairwise_orthogonal(self):
        ff = full_factorial(2)
        assert ff.runs.T @ ff.runs == pytest.approx(4 * np.eye(2))

    def test_size_guard(self):
        with pytest.raises(ResourceLimitError):
            full_factorial(21)


class TestRegularFraction:
    def test_table_design_and_aliases(self):
        design, report = regular_fraction(4, [(1, 2, 3, 4)])
        assert np.array_equal(design.runs, TABLE_2_4_1)
        assert report.resolution == 4
        aliases = dict(report.aliased_pairs)
        assert aliases["x1"] == ((1, "x2*x3*x4"),)
        assert aliases["x1*x2"] == ((1, "x3*x4"),)

    def test_word_products_constant(self):
        design, _ = regular_fraction(6, [(1, 2, 5), (2, 3, 4, 6)], signs=[1, -1])
        assert np.all(design.runs[:, [0, 1, 4]].prod(axis=1) == 1)
        assert np.all(design.runs[:, [1, 2, 3, 5]].prod(axis=1) == -1)
        assert design.n == 16

    def test_dependent_words_rejected(self):
        with pytest.raises(InvalidGeneratorError):
            regular_fraction(6, [(1, 2, 5), (3, 4, 6), (1, 2, 3, 4, 5, 6)])

    def test_11_variables_in_16_runs(self):
        design, report = regular_fraction(11, GENERATORS_11_IN_16)
        assert design.n == 16
        assert report.resolution == 3
        # each main effect aliased with at most four two-variable interactions
        rel_words = {frozenset(w) for w, _ in report.defining_relation}
        for i in range(1, 12):
            count = sum(1 for w in rel_words if len(w) == 3 and i in w)
            assert count <= 4
        assert max(
            sum(1 for w in rel_words if len(w) == 3 and i in w) for i in range(1, 12)
        ) == 4

    def test_alias_string_columns_equal_up_to_sign(self):
        design, report = regular_fraction(4, [(1, 2, 3, 4)])
        # x1 and x2*x3*x4 are the same column; x1 and x2 are orthogonal
        r = design.runs
        assert np.array_equal(r[:, 0], r[:, 1] * r[:, 2] * r[:, 3])
        assert r[:, 0] @ r[:, 1] == 0


class TestHadamard:
    @pytest.mark.parametrize("n", [1, 2, 4, 8, 12, 16, 20, 24, 32, 40])
    def test_defining_property(self, n):
        h = hadamard(n)
        assert np.array_equal(h.matrix.T @ h.matrix, n * np.eye(n, dtype=int))

    def test_unsupported_order(self):
        with pytest.raises(ConstructionError) as err:
            hadamard(10)
        assert "multiple of 4" in str(err.value)

    def test_order_28_unavailable_names_supported(self):
        with pytest.raises(ConstructionError):
            hadamard(28)

    def test_paley12_is_strength_two_array(self):
        # all Hadamard matrices of order 12 are equivalent up to row/column
        # permutation and sign switches, so the strength-2 property pins the
        # construction down to equivalence with the stored 12-run design
        h = hadamard(12)
        flip = np.where(h.matrix[:, 0] < 0, -1, 1)
        design = (h.matrix * flip[:, None])[:, 1:]
        for i, j in combinations(range(11), 2):
            pairs = design[:, i] * 2 + design[:, j]
            _, counts = np.unique(pairs, return_counts=True)
            assert counts.tolist() == [3, 3, 3, 3]


class TestPlackettBurman:
    def test_pb12_verbatim(self):
        pb = plackett_burman(12)
        assert np.array_equal(pb.runs, PB12_RUNS)

    def test_strength_two(self):
        pb = plackett_burman(12)
        for i, j in combinations(range(11), 2):
            pairs = pb.runs[:, i] * 2 + pb.runs[:, j]
            _, counts = np.unique(pairs, return_counts=True)
            assert counts.tolist() == [3, 3, 3, 3]

    def test_pb8_is_regular_fraction_strength(self):
        pb = plackett_burman(8)
        H = build_model_matrix(pb, TermSet.main_effects(7))
        assert np.allclose(H.H.T @ H.H, 8 * np.eye(8))

    def test_model_matrix_orthogonality(self):
        pb = plackett_burman(20)
        H = build_model_matrix(pb, TermSet.main_effects(19))
        assert np.allclose(H.H.T @ H.H, 20 * np.eye(20))


class TestDefinitiveScreening:
    def test_d6_ships_printed_table(self):
        dsd = definitive_screening(6)
        assert np.array_equal(dsd.runs, DSD6_RUNS)

    def test_d6_zero_structure(self):
        dsd = definitive_screening(6)
        for j in range(6):
            col = dsd.runs[:, j]
            assert np.sum(col == 0) == 3
            assert col.sum() == 0

    @pytest.mark.parametrize("d", [4, 6, 8, 10, 20])
    def test_orthogonality_invariants_exact(self, d):
        dsd = definitive_screening(d, seed=5)
        assert dsd.n == 2 * d + 1
        X = dsd.runs.astype(np.int64)
        assert np.array_equal(dsd.runs, X)  # integer-valued entries
        for i in range(d):
            for j in range(d):
                if i != j:
                    assert (X[:, i] * X[:, j] ** 2).sum() == 0
            for j, k in combinations(range(d), 2):
                assert (X[:, i] * X[:, j] * X[:, k]).sum() == 0

    def test_mirrored_pairs_and_centre(self):
        dsd = definitive_screening(8)
        top = dsd.runs[0:16:2]
        bottom = dsd.runs[1:16:2]
        assert np.array_equal(bottom, -top)
        assert np.array_equal(dsd.runs[-1], np.zeros(8))
        assert np.array_equal(np.diag(top), np.zeros(8))

    def test_odd_d_rejected(self):
        with pytest.raises(ValueError):
            definitive_screening(7)


class TestSFRD:
    def test_d20_size(self):
        assert sfrd(20).n == 42

    def test_d2_rows_by_definition(self):
        runs = sfrd(2).runs
        expected = np.array([
            [-1, -1], [1, -1], [-1, 1], [-1, 1], [1, -1], [1, 1]], dtype=float)
        assert np.array_equal(runs, expected)

    def test_foldover_pairing(self):
        runs = sfrd(7).runs
        d = 7
        assert np.array_equal(runs[0] + runs[2 * d + 1], np.zeros(d))
        for i in range(d):
            assert np.array_equal(runs[1 + i] + runs[1 + d + i], np.zeros(d))


class TestOfaatAndFoldover:
    def test_ofaat_structure(self):
        plan = ofaat(3)
        assert plan.n == 4
        assert np.array_equal(plan.runs[0], [-1, -1, -1])
        for j in range(1, 4):
            diff = plan.runs[j] != plan.runs[0]
            assert diff.sum() == 1 and plan.runs[j, j - 1] == 1

    def test_ofaat_d20(self):
        assert ofaat(20).n == 21

    def test_foldover_of_ofaat_equals_sfrd_rowset(self):
        d = 5
        folded = foldover(ofaat(d))
        assert folded.n == 2 * d + 2
        rows_a = {tuple(r) for r in folded.runs}
        rows_b = {tuple(r) for r in sfrd(d).runs}
        assert rows_a == rows_b

    def test_foldover_column_sums_zero(self):
        folded = foldover(plackett_burman(12))
        assert np.array_equal(folded.runs.sum(axis=0), np.zeros(11))

    def test_foldover_breaks_main_2fi_aliasing(self):
        design, _ = regular_fraction(4, [(1, 2, 3, 4)])
        folded = foldover(design)
        H1 = build_model_matrix(folded, TermSet.main_effects(4, intercept=False))
        H2 = build_model_matrix(folded, TermSet.interactions(4, 2))
        assert np.allclose(H1.H.T @ H2.H, 0.0)

    def test_foldover_rejects_continuous(self):
        from screenkit.core import Design
        d = Design(np.array([[0.2, 0.8]]), Coding.UNIT)
        with pytest.raises(ValueError):
            foldover(d)
