"""Benjamini-Hochberg and Benjamini-Yekutieli step-up procedures.

These ignore the testing order: p-values are sorted internally and every
hypothesis receives a decision, so no position is ever ``UNTESTED``.
"""

import numpy as np

from .exceptions import ParameterError
from .procedures import Decision, TestOutcome, as_pvalues

__all__ = ["harmonic_number", "step_up_constants", "run_bh", "run_by", "batch_step_up"]


def harmonic_number(m: int) -> float:
    """``H_m = sum_{j=1}^m 1/j`` by direct summation."""
    return float(np.sum(1.0 / np.arange(1, m + 1)))


def step_up_constants(m: int, alpha: float, dependent: bool = False) -> np.ndarray:
    """Sorted-position constants ``i*alpha/m`` (BH) or ``i*alpha/(m*H_m)`` (BY)."""
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha!r}")
    i = np.arange(1, m + 1)
    scale = m * harmonic_number(m) if dependent else m
    return i * alpha / scale


def _step_up(p, alpha, dependent):
    p = as_pvalues(p)
    m = p.size
    crit = step_up_constants(m, alpha, dependent)
    order = np.argsort(p, kind="stable")
    passed = np.flatnonzero(p[order] <= crit)
    n_reject = int(passed[-1]) + 1 if passed.size else 0
    decisions = [Decision.ACCEPTED] * m
    thresholds = [float("nan")] * m
    for rank, idx in enumerate(order):
        thresholds[idx] = float(crit[rank])
        if rank < n_reject:
            decisions[idx] = Decision.REJECTED
    return TestOutcome(tuple(decisions), tuple(thresholds), n_reject, m - n_reject, m)


def run_bh(p, alpha: float) -> TestOutcome:
    """BH step-up: reject the ``R`` smallest p-values, ``R = max{i: p_(i) <= i*alpha/m}``.

    ``thresholds`` reports the constant matched to each hypothesis' sorted rank.
    """
    return _step_up(p, alpha, dependent=False)


def run_by(p, alpha: float) -> TestOutcome:
    """BY step-up with constants ``i*alpha/(m*H_m)``; valid under any dependence."""
    return _step_up(p, alpha, dependent=True)


def batch_step_up(P, alpha: float, dependent: bool = False) -> np.ndarray:
    """Rejection masks of BH (or BY) applied to each row of a ``(B, m)`` array."""
    P = np.asarray(P, dtype=float)
    B, m = P.shape
    crit = step_up_constants(m, alpha, dependent)
    sorted_p = np.sort(P, axis=1)
    ok = sorted_p <= crit
    # number of rejections = 1 + last sorted index passing its constant
    last = np.where(ok.any(axis=1), m - np.argmax(ok[:, ::-1], axis=1), 0)
    cutoff = np.where(last > 0, sorted_p[np.arange(B), np.maximum(last - 1, 0)], -np.inf)
    return P <= cutoff[:, None]
