import itertools
import math

import numpy as np
import pytest

from surropt.de import RunTrace, VariantId
from surropt.stats import (
    RunSet,
    aggregate,
    outperformance_counts,
    pairwise_comparison_matrix,
    wilcoxon_rank_sum,
)


def trace(values, variant=VariantId.DERAND, seed=0):
    return RunTrace(np.asarray(values, dtype=float), np.zeros(2), variant, seed)


def runset(list_of_curves, variant=VariantId.DERAND, scenario=1):
    return RunSet(variant, scenario, [trace(c, variant, i) for i, c in enumerate(list_of_curves)])


class TestAggregate:
    def test_identical_traces(self):
        rs = runset([[3.0, 2.0, 1.0]] * 10)
        curves = aggregate(rs)
        np.testing.assert_array_equal(curves.mean, [3.0, 2.0, 1.0])
        np.testing.assert_array_equal(curves.min, [3.0, 2.0, 1.0])
        np.testing.assert_array_equal(curves.std, np.zeros(3))

    def test_two_constant_traces(self):
        rs = runset([[1.0, 1.0], [3.0, 3.0]])
        curves = aggregate(rs)
        np.testing.assert_array_equal(curves.mean, [2.0, 2.0])
        np.testing.assert_array_equal(curves.min, [1.0, 1.0])
        np.testing.assert_allclose(curves.std, [math.sqrt(2.0)] * 2)

    def test_min_below_mean(self):
        rng = np.random.default_rng(0)
        rs = runset([np.sort(rng.uniform(size=6))[::-1] for _ in range(5)])
        curves = aggregate(rs)
        assert (curves.min <= curves.mean).all()

    def test_single_trace_warns_with_zero_std(self):
        rs = runset([[2.0, 1.0]])
        with pytest.warns(UserWarning):
            curves = aggregate(rs)
        np.testing.assert_array_equal(curves.std, [0.0, 0.0])

    def test_padding_with_last_value(self):
        rs = RunSet(
            VariantId.DERAND,
            1,
            [trace([3.0, 1.0]), trace([2.0, 2.0, 0.5])],
        )
        matrix = rs.padded_matrix()
        np.testing.assert_array_equal(matrix, [[3.0, 1.0, 1.0], [2.0, 2.0, 0.5]])

    def test_permutation_invariance(self):
        curves_a = aggregate(runset([[3.0, 1.0], [2.0, 2.0], [5.0, 0.0]]))
        curves_b = aggregate(runset([[5.0, 0.0], [3.0, 1.0], [2.0, 2.0]]))
        np.testing.assert_array_equal(curves_a.mean, curves_b.mean)
        np.testing.assert_array_equal(curves_a.std, curves_b.std)
        np.testing.assert_array_equal(curves_a.min, curves_b.min)


def exact_two_sided_by_enumeration(a, b):
    """Oracle: enumerate every assignment of ranks to the first sample."""
    n1, n = len(a), len(a) + len(b)
    ranks = np.argsort(np.argsort(np.concatenate([a, b]))) + 1  # tie-free by construction
    w_obs = ranks[:n1].sum()
    sums = [sum(combo) for combo in itertools.combinations(range(1, n + 1), n1)]
    total = len(sums)
    lo = sum(1 for s in sums if s <= w_obs) / total
    hi = sum(1 for s in sums if s >= w_obs) / total
    return min(1.0, 2.0 * min(lo, hi))


class TestWilcoxonRankSum:
    def test_worked_example(self):
        result = wilcoxon_rank_sum([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
        assert result.method == "exact"
        assert result.statistic == 6.0
        assert result.p_value == pytest.approx(0.1)
        assert not result.significant_at_5pct

    def test_identical_samples_not_significant(self):
        result = wilcoxon_rank_sum([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert result.p_value >= 0.99
        assert not result.significant_at_5pct

    def test_two_sided_symmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            a, b = rng.normal(size=6), rng.normal(size=5)
            p_ab = wilcoxon_rank_sum(a, b).p_value
            p_ba = wilcoxon_rank_sum(b, a).p_value
            assert p_ab == pytest.approx(p_ba, abs=1e-12)

    @pytest.mark.parametrize("n1,n2", [(n1, n2) for n1 in range(1, 8) for n2 in range(n1, 8)])
    def test_exact_path_matches_enumeration(self, n1, n2):
        rng = np.random.default_rng(n1 * 31 + n2)
        for _ in range(3):
            combined = rng.permutation(np.arange(1.0, n1 + n2 + 1.0))  # tie-free
            a, b = combined[:n1], combined[n1:]
            result = wilcoxon_rank_sum(a, b)
            assert result.method == "exact"
            assert result.p_value == exact_two_sided_by_enumeration(a, b)

    def test_normal_approximation_close_to_exact(self):
        from surropt.stats import _exact_tails

        rng = np.random.default_rng(5)
        for _ in range(10):
            a = rng.normal(size=10)
            b = rng.normal(loc=rng.uniform(0, 1.5), size=10)
            result = wilcoxon_rank_sum(a, b)
            assert result.method == "normal-approximation"
            lo, hi = _exact_tails(10, 10, result.statistic)
            exact_p = min(1.0, 2.0 * min(lo, hi))
            assert abs(result.p_value - exact_p) < 0.02

    def test_one_sided_alternatives(self):
        a, b = [1.0, 2.0, 3.0], [4.0, 5.0, 6.0]
        less = wilcoxon_rank_sum(a, b, alternative="less")
        greater = wilcoxon_rank_sum(a, b, alternative="greater")
        assert less.p_value == pytest.approx(0.05)
        assert greater.p_value == pytest.approx(1.0)

    def test_ties_use_normal_path(self):
        result = wilcoxon_rank_sum([1.0, 1.0, 2.0], [1.0, 3.0, 4.0])
        assert result.method == "normal-approximation"
        assert 0.0 <= result.p_value <= 1.0

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            wilcoxon_rank_sum([], [1.0])

    def test_all_values_tied(self):
        result = wilcoxon_rank_sum([2.0, 2.0], [2.0, 2.0, 2.0])
        assert result.p_value == 1.0


class TestComparisonMatrix:
    def make_runsets(self, final_values_by_variant, scenario=1):
        runsets = []
        for variant, finals in final_values_by_variant.items():
            traces = [trace([10.0, float(v)], VariantId(variant), i) for i, v in enumerate(finals)]
            runsets.append(RunSet(VariantId(variant), scenario, traces))
        return runsets

    def test_diagonal_not_significant(self):
        rng = np.random.default_rng(0)
        runsets = self.make_runsets(
            {"DERAND": rng.normal(size=10), "DEBEST": rng.normal(size=10), "JADE": rng.normal(size=10)}
        )
        matrix = pairwise_comparison_matrix(runsets)
        for i in range(3):
            assert not matrix.results[i][i].significant_at_5pct

    def test_p_matrix_symmetric(self):
        rng = np.random.default_rng(1)
        runsets = self.make_runsets(
            {v.value: rng.normal(size=10) for v in list(VariantId)[:5]}
        )
        p = pairwise_comparison_matrix(runsets).p_values()
        np.testing.assert_allclose(p, p.T, atol=1e-12)

    def test_disjoint_ranges_significant(self):
        runsets = self.make_runsets(
            {"DERAND": np.linspace(0.0, 1.0, 10), "DEBEST": np.linspace(5.0, 6.0, 10)}
        )
        matrix = pairwise_comparison_matrix(runsets)
        assert matrix.results[0][1].significant_at_5pct
        assert matrix.results[1][0].significant_at_5pct

    def test_mismatched_lengths_rejected(self):
        a = RunSet(VariantId.DERAND, 1, [trace([1.0, 0.5]), trace([1.0, 0.4])])
        b = RunSet(VariantId.DEBEST, 1, [trace([1.0, 0.5, 0.2]), trace([1.0, 0.4, 0.1])])
        with pytest.raises(ValueError):
            pairwise_comparison_matrix([a, b])

    def test_outperformance_counts_direction(self):
        runsets = self.make_runsets(
            {"DERAND": np.linspace(5.0, 6.0, 10), "DEBEST": np.linspace(0.0, 1.0, 10)}
        )
        matrix = pairwise_comparison_matrix(runsets)
        counts = outperformance_counts(matrix, runsets)
        assert counts == {"DERAND": 1, "DEBEST": 0}

    def test_requested_eval_index(self):
        a = RunSet(VariantId.DERAND, 1, [trace([9.0, 1.0]), trace([8.0, 1.0])])
        values = a.final_values(at_eval=1)
        np.testing.assert_array_equal(values, [9.0, 8.0])
        with pytest.raises(ValueError):
            a.final_values(at_eval=5)
