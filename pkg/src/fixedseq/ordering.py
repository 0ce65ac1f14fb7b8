"""Data-driven ordering of hypotheses followed by fixed-sequence testing.

Each row of a data matrix yields an ordering statistic ``Y`` and a p-value.
Hypotheses are tested in decreasing order of ``Y``.  The pairs below are
chosen so that ``Y`` is independent of the test statistic under the null:

=======================  ===================================  =====================
statistic kind           ordering statistic ``Y``             test
=======================  ===================================  =====================
``one_sample_t``         sum of squares                       one-sample t
``two_sample_t``         total sum of squares (pooled)        pooled two-sample t
``one_sample_wilcoxon``  median of absolute values            signed-rank
``two_sample_wilcoxon``  interquartile range of pooled data   rank-sum
=======================  ===================================  =====================
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DegenerateStatisticError, ParameterError
from .procedures import ProcedureSpec, TestOutcome, run_procedure
from .special import rank_sum_p, signed_rank_p, t_sf, t_two_sided_p

__all__ = [
    "StatisticKind",
    "DataMatrix",
    "OrderedTestPlan",
    "order_stat_one_sample_t",
    "order_stat_two_sample_t",
    "order_stat_one_sample_wilcoxon",
    "order_stat_two_sample_wilcoxon",
    "row_statistics",
    "build_plan",
    "order_then_test",
]


class StatisticKind(str, enum.Enum):
    ONE_SAMPLE_T = "one_sample_t"
    TWO_SAMPLE_T = "two_sample_t"
    ONE_SAMPLE_WILCOXON = "one_sample_wilcoxon"
    TWO_SAMPLE_WILCOXON = "two_sample_wilcoxon"

    @property
    def two_sample(self) -> bool:
        return self in (StatisticKind.TWO_SAMPLE_T, StatisticKind.TWO_SAMPLE_WILCOXON)


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """``m`` variables (rows) observed ``n`` times (columns).

    ``groups`` is an optional boolean-like vector over columns; ``True``
    marks the first group in two-sample settings.
    """

    values: np.ndarray
    groups: Optional[np.ndarray] = None
    row_ids: Optional[tuple] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ParameterError("data matrix must be two-dimensional")
        m, n = values.shape
        if m < 1 or n < 2:
            raise ParameterError(f"need at least one row and two columns, got {m}x{n}")
        if not np.isfinite(values).all():
            raise ParameterError("data matrix contains non-finite values")
        object.__setattr__(self, "values", values)
        if self.groups is not None:
            groups = np.asarray(self.groups, dtype=bool)
            if groups.shape != (n,):
                raise ParameterError("group labels must have one entry per column")
            object.__setattr__(self, "groups", groups)
        if self.row_ids is not None and len(self.row_ids) != m:
            raise ParameterError("row_ids must have one entry per row")

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class OrderedTestPlan:
    """Testing order and aligned p-values.

    ``permutation[j]`` is the 0-based row tested at position ``j``;
    ``ordering_values`` and ``row_pvalues`` are indexed by row, ``pvalues``
    by testing position.
    """

    permutation: np.ndarray
    ordering_values: np.ndarray
    row_pvalues: np.ndarray
    statistic_kind: StatisticKind

    @property
    def pvalues(self) -> np.ndarray:
        return self.row_pvalues[self.permutation]


def _as_row(row, min_n=2):
    row = np.asarray(row, dtype=float)
    if row.ndim != 1 or row.size < min_n:
        raise ParameterError(f"need at least {min_n} observations, got {row.size}")
    return row


def _split(row, groups):
    row = np.asarray(row, dtype=float)
    groups = np.asarray(groups, dtype=bool)
    if groups.shape != row.shape:
        raise ParameterError("group labels must match the row length")
    return row[groups], row[~groups]


def order_stat_one_sample_t(row, alternative="two-sided"):
    """Sum of squares and one-sample t p-value for ``mu == 0``.

    ``alternative="greater"`` gives the one-sided p-value for ``mu > 0``.
    """
    row = _as_row(row)
    n = row.size
    y = float(np.sum(row * row))
    sd = np.std(row, ddof=1)
    if sd == 0:
        raise DegenerateStatisticError("zero sample variance; t statistic undefined")
    t = np.sqrt(n) * row.mean() / sd
    return y, _t_pvalue(t, n - 1, alternative)


def _t_pvalue(t, df, alternative):
    if alternative == "two-sided":
        return float(t_two_sided_p(t, df))
    if alternative == "greater":
        return float(t_sf(t, df))
    raise ParameterError(f"unknown alternative {alternative!r}")


def order_stat_two_sample_t(row, groups, alternative="two-sided"):
    """Total sum of squares about the pooled mean and pooled two-sample t p-value."""
    x1, x2 = _split(row, groups)
    n1, n2 = x1.size, x2.size
    if n1 < 2 or n2 < 2:
        raise ParameterError(f"each group needs at least 2 observations, got {n1} and {n2}")
    pooled = np.concatenate([x1, x2])
    y = float(np.sum((pooled - pooled.mean()) ** 2))
    df = n1 + n2 - 2
    s2 = (np.sum((x1 - x1.mean()) ** 2) + np.sum((x2 - x2.mean()) ** 2)) / df
    if s2 == 0:
        raise DegenerateStatisticError("zero pooled variance; t statistic undefined")
    t = (x1.mean() - x2.mean()) / np.sqrt(s2 * (1.0 / n1 + 1.0 / n2))
    return y, _t_pvalue(t, df, alternative)


def order_stat_one_sample_wilcoxon(row):
    """Median absolute value and signed-rank p-value."""
    row = _as_row(row)
    if not np.any(row != 0):
        raise DegenerateStatisticError("all observations are zero; signed-rank test undefined")
    return float(np.median(np.abs(row))), signed_rank_p(row)


def order_stat_two_sample_wilcoxon(row, groups):
    """Pooled interquartile range and rank-sum p-value.

    Quartiles use linear interpolation between order statistics (the
    ``numpy.percentile`` default).
    """
    x1, x2 = _split(row, groups)
    if x1.size < 1 or x2.size < 1 or x1.size + x2.size < 4:
        raise ParameterError("rank-sum test needs two nonempty groups and at least 4 values")
    q1, q3 = np.percentile(np.concatenate([x1, x2]), [25, 75])
    return float(q3 - q1), rank_sum_p(x1, x2)


def row_statistics(data: DataMatrix, kind, alternative="two-sided"):
    """Ordering statistics and p-values for every row.

    Raises :class:`DegenerateStatisticError` naming all degenerate rows.
    """
    kind = StatisticKind(kind)
    if kind.two_sample and data.groups is None:
        raise ParameterError(f"{kind.value} requires group labels")
    y = np.empty(data.m)
    p = np.empty(data.m)
    bad = []
    for idx, row in enumerate(data.values):
        try:
            if kind is StatisticKind.ONE_SAMPLE_T:
                y[idx], p[idx] = order_stat_one_sample_t(row, alternative)
            elif kind is StatisticKind.TWO_SAMPLE_T:
                y[idx], p[idx] = order_stat_two_sample_t(row, data.groups, alternative)
            elif kind is StatisticKind.ONE_SAMPLE_WILCOXON:
                y[idx], p[idx] = order_stat_one_sample_wilcoxon(row)
            else:
                y[idx], p[idx] = order_stat_two_sample_wilcoxon(row, data.groups)
        except DegenerateStatisticError:
            bad.append(idx)
    if bad:
        names = [str(data.row_ids[i]) if data.row_ids else str(i + 1) for i in bad]
        raise DegenerateStatisticError(
            f"{len(bad)} degenerate row(s): {', '.join(names[:20])}" + (" ..." if len(bad) > 20 else ""),
            rows=bad,
        )
    return y, p


def testing_order(y) -> np.ndarray:
    """Indices sorting ``y`` in decreasing order, ties by ascending index."""
    y = np.asarray(y, dtype=float)
    return np.lexsort((np.arange(y.size), -y))


def build_plan(data: DataMatrix, kind, alternative="two-sided") -> OrderedTestPlan:
    """Compute row statistics and the testing order (largest ``Y`` first)."""
    kind = StatisticKind(kind)
    y, p = row_statistics(data, kind, alternative)
    return OrderedTestPlan(testing_order(y), y, p, kind)


def order_then_test(data: DataMatrix, kind, spec: ProcedureSpec, alternative="two-sided"):
    """Order hypotheses by ``Y`` and run ``spec`` along that order.

    Returns ``(plan, outcome)``.  ``outcome.decisions`` and
    ``outcome.thresholds`` are indexed by original row; ``outcome.order`` is
    the testing order and ``outcome.stop_index`` counts tested positions.
    """
    plan = build_plan(data, kind, alternative)
    in_order = run_procedure(plan.pvalues, spec)
    decisions = [None] * data.m
    thresholds = [None] * data.m
    for pos, row in enumerate(plan.permutation):
        decisions[row] = in_order.decisions[pos]
        thresholds[row] = in_order.thresholds[pos]
    outcome = TestOutcome(
        tuple(decisions),
        tuple(thresholds),
        in_order.rejection_count,
        in_order.acceptance_count,
        in_order.stop_index,
        order=tuple(int(r) for r in plan.permutation),
    )
    return plan, outcome
