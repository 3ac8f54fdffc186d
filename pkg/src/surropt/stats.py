"""Convergence aggregation and nonparametric run-set comparison.

The two-sample test is the Wilcoxon rank-sum test on the rank sum W of the
first sample. Small tie-free problems (n1 + n2 <= 14) use the exact null
distribution, computed by a subset-sum count of rank assignments; larger
or tied problems use the normal approximation with midranks, tie-corrected
variance and a continuity correction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .de.base import RunTrace, VariantId
from .util import midranks

_EXACT_LIMIT = 14
ALPHA = 0.05


@dataclass
class RunSet:
    """All independent runs of one variant under one weighting scenario."""

    variant: VariantId
    scenario: int
    traces: list[RunTrace]

    def __post_init__(self):
        if not self.traces:
            raise ValueError("a run set needs at least one trace")

    def padded_matrix(self, length: int | None = None) -> np.ndarray:
        """Traces stacked row-wise, right-padded with their last best value."""
        length = length or max(len(t.best_so_far) for t in self.traces)
        rows = []
        for t in self.traces:
            b = t.best_so_far
            if len(b) > length:
                raise ValueError(f"trace of length {len(b)} exceeds requested length {length}")
            rows.append(np.concatenate([b, np.full(length - len(b), b[-1])]))
        return np.stack(rows)

    def final_values(self, at_eval: int | None = None) -> np.ndarray:
        """Best-so-far of each run at a 1-based evaluation index (default: final)."""
        matrix = self.padded_matrix()
        idx = matrix.shape[1] - 1 if at_eval is None else at_eval - 1
        if not 0 <= idx < matrix.shape[1]:
            raise ValueError(f"evaluation index {at_eval} outside trace length {matrix.shape[1]}")
        return matrix[:, idx]


@dataclass
class AggregateCurves:
    mean: np.ndarray
    std: np.ndarray
    min: np.ndarray


def aggregate(runset: RunSet) -> AggregateCurves:
    """Pointwise mean, unbiased std and minimum of the padded traces."""
    matrix = runset.padded_matrix()
    if matrix.shape[0] < 2:
        warnings.warn("aggregating a single trace; standard deviation reported as zeros")
        std = np.zeros(matrix.shape[1])
    else:
        std = matrix.std(axis=0, ddof=1)
    return AggregateCurves(mean=matrix.mean(axis=0), std=std, min=matrix.min(axis=0))


@dataclass
class StatTestResult:
    statistic: float  # rank sum W of the first sample
    p_value: float
    significant_at_5pct: bool
    method: str  # "exact" | "normal-approximation"


@lru_cache(maxsize=None)
def _rank_sum_counts(n1: int, n: int) -> tuple[int, ...]:
    """counts[s] = number of n1-subsets of ranks {1..n} with sum s."""
    max_sum = n1 * n
    table = np.zeros((n1 + 1, max_sum + 1), dtype=object)
    table[0, 0] = 1
    for rank in range(1, n + 1):
        for m in range(min(rank, n1), 0, -1):
            table[m, rank:] += table[m - 1, : max_sum - rank + 1]
    return tuple(int(v) for v in table[n1])


def _exact_tails(n1: int, n2: int, w: float) -> tuple[float, float]:
    """P(W <= w) and P(W >= w) under the exact tie-free null distribution."""
    counts = _rank_sum_counts(n1, n1 + n2)
    total = math.comb(n1 + n2, n1)
    lo = sum(c for s, c in enumerate(counts) if s <= w)
    hi = sum(c for s, c in enumerate(counts) if s >= w)
    return lo / total, hi / total


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def wilcoxon_rank_sum(a, b, alternative: str = "two-sided") -> StatTestResult:
    """Rank-sum test of samples `a` and `b` at the 5% significance level.

    `alternative` is "two-sided" (default), "less" (a tends smaller) or
    "greater".
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    if alternative not in ("two-sided", "less", "greater"):
        raise ValueError(f"unknown alternative {alternative!r}")

    n1, n2 = a.size, b.size
    combined = np.concatenate([a, b])
    ranks = midranks(combined)
    w = float(ranks[:n1].sum())
    has_ties = len(np.unique(combined)) < n1 + n2

    if not has_ties and n1 + n2 <= _EXACT_LIMIT:
        lo, hi = _exact_tails(n1, n2, w)
        if alternative == "less":
            p = lo
        elif alternative == "greater":
            p = hi
        else:
            p = min(1.0, 2.0 * min(lo, hi))
        method = "exact"
    else:
        mean = n1 * (n1 + n2 + 1) / 2.0
        _, tie_counts = np.unique(combined, return_counts=True)
        n = n1 + n2
        tie_term = float(((tie_counts**3 - tie_counts).sum()) / (n * (n - 1))) if n > 1 else 0.0
        var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
        if var <= 0.0:
            p = 1.0
        elif alternative == "two-sided":
            z = max(0.0, abs(w - mean) - 0.5) / math.sqrt(var)
            p = min(1.0, 2.0 * _normal_sf(z))
        elif alternative == "less":
            z = (w - mean + 0.5) / math.sqrt(var)
            p = 1.0 - _normal_sf(z)
        else:
            z = (w - mean - 0.5) / math.sqrt(var)
            p = _normal_sf(z)
        method = "normal-approximation"

    return StatTestResult(
        statistic=w,
        p_value=float(p),
        significant_at_5pct=bool(p < ALPHA),
        method=method,
    )


@dataclass
class ComparisonMatrix:
    variants: list[VariantId]
    results: list[list[StatTestResult]]

    def p_values(self) -> np.ndarray:
        return np.array([[r.p_value for r in row] for row in self.results])

    def significance_mask(self) -> np.ndarray:
        return np.array([[r.significant_at_5pct for r in row] for row in self.results])


def pairwise_comparison_matrix(runsets: list[RunSet], at_eval: int | None = None) -> ComparisonMatrix:
    """All-pairs rank-sum tests on best values at an evaluation index."""
    if len(runsets) < 2:
        raise ValueError("need at least 2 run sets to compare")
    lengths = {rs.padded_matrix().shape[1] for rs in runsets}
    if len(lengths) > 1:
        raise ValueError(f"run sets have mismatched trace lengths after padding: {sorted(lengths)}")
    finals = [rs.final_values(at_eval) for rs in runsets]
    results = [
        [wilcoxon_rank_sum(finals[i], finals[j]) for j in range(len(runsets))]
        for i in range(len(runsets))
    ]
    return ComparisonMatrix(variants=[rs.variant for rs in runsets], results=results)


def outperformance_counts(matrix: ComparisonMatrix, runsets: list[RunSet],
                          at_eval: int | None = None) -> dict[str, int]:
    """Per variant: how many other variants are significantly better than it.

    Direction comes from the rank sums: the variant with the smaller mean
    rank of final best values is the better one of a significant pair.
    """
    finals = [rs.final_values(at_eval) for rs in runsets]
    counts = {rs.variant.value: 0 for rs in runsets}
    for i in range(len(runsets)):
        for j in range(len(runsets)):
            if i == j:
                continue
            result = matrix.results[i][j]
            n1 = len(finals[i])
            expected = n1 * (n1 + len(finals[j]) + 1) / 2.0
            if result.significant_at_5pct and result.statistic < expected:
                # i has significantly smaller (better) values than j
                counts[runsets[j].variant.value] += 1
    return counts
