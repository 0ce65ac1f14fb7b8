"""Critical constants and step-down engines for fixed-sequence FDR procedures.

Four fixed-sequence procedures are provided:

=================  ====================================================  ==========
kind               critical constant at position ``i`` (1-based)          dependence
=================  ====================================================  ==========
``arbitrary``      ``min(m*alpha / (m-i+1), 1)``                          arbitrary
``negassoc``       ``i*alpha / (1 + (i-1)*alpha)``                        negative
``k_arbitrary``    ``alpha/k`` for ``i <= k``, else
                   ``(m-k+1)*alpha / ((m-i+1)*k)``                         arbitrary
``k_adaptive``     ``(r+1)*alpha / (k + (i-k)*alpha)``, ``r`` = rejections
                   among the first ``i-1`` tested hypotheses              independent
=================  ====================================================  ==========

The first two stop at the first acceptance.  The ``k_*`` procedures keep
testing until the ``k``-th acceptance and reduce to the first two when
``k == 1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import ParameterError

__all__ = [
    "Decision",
    "ProcedureKind",
    "ProcedureSpec",
    "CriticalSchedule",
    "TestOutcome",
    "as_pvalues",
    "crit_arbitrary",
    "crit_negassoc",
    "crit_k_arbitrary",
    "crit_k_adaptive",
    "schedule_for",
    "run_fixed_sequence",
    "run_with_schedule",
    "run_procedure",
    "batch_fixed_sequence",
    "reject_batch",
]


class Decision(str, enum.Enum):
    REJECTED = "reject"
    ACCEPTED = "accept"
    UNTESTED = "untested"


class ProcedureKind(str, enum.Enum):
    ARBITRARY = "arbitrary"
    NEG_ASSOC = "negassoc"
    K_ARBITRARY = "k_arbitrary"
    K_ADAPTIVE = "k_adaptive"
    BH = "bh"
    BY = "by"

    @property
    def is_fixed_sequence(self) -> bool:
        return self not in (ProcedureKind.BH, ProcedureKind.BY)

    @property
    def uses_k(self) -> bool:
        return self in (ProcedureKind.K_ARBITRARY, ProcedureKind.K_ADAPTIVE)

    @classmethod
    def parse(cls, name) -> "ProcedureKind":
        """Resolve a kind from its value, enum name or a short alias.

        The numbered aliases ``p1`` .. ``p4`` follow the usual numbering of
        the four fixed-sequence procedures.
        """
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        if key in _ALIASES:
            return _ALIASES[key]
        for kind in cls:
            if key in (kind.value, kind.name.lower()):
                return kind
        raise ParameterError(f"unknown procedure {name!r}")


_ALIASES = {
    "p1": ProcedureKind.ARBITRARY,
    "p2": ProcedureKind.NEG_ASSOC,
    "p3": ProcedureKind.K_ARBITRARY,
    "p4": ProcedureKind.K_ADAPTIVE,
    "neg_assoc": ProcedureKind.NEG_ASSOC,
    "karbitrary": ProcedureKind.K_ARBITRARY,
    "kadaptive": ProcedureKind.K_ADAPTIVE,
}


@dataclass(frozen=True)
class ProcedureSpec:
    """Which procedure to run, at which level, with which acceptance budget.

    ``k`` must be 1 for the conventional kinds and is ignored by BH/BY.  It
    is checked against the number of hypotheses only when a procedure is run.
    """

    kind: ProcedureKind
    alpha: float
    k: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", ProcedureKind.parse(self.kind))
        alpha = float(self.alpha)
        if not 0.0 < alpha < 1.0:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        object.__setattr__(self, "alpha", alpha)
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError(f"k must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        if self.kind in (ProcedureKind.ARBITRARY, ProcedureKind.NEG_ASSOC) and self.k != 1:
            raise ParameterError(f"{self.kind.value} is a conventional procedure; k must be 1")

    @property
    def label(self) -> str:
        if self.kind.uses_k:
            return f"{self.kind.value}(k={self.k})"
        return self.kind.value


def as_pvalues(p) -> np.ndarray:
    """Validate a 1-d sequence of p-values and return it as a float array."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1:
        raise ParameterError("p-values must be a one-dimensional sequence")
    if arr.size == 0:
        raise ParameterError("p-value sequence is empty")
    if np.isnan(arr).any() or (arr < 0).any() or (arr > 1).any():
        bad = int(np.flatnonzero(np.isnan(arr) | (arr < 0) | (arr > 1))[0])
        raise ParameterError(f"p-value at position {bad + 1} is outside [0, 1]: {arr[bad]!r}")
    return arr


def _check_m_alpha(m, alpha):
    if int(m) != m or m < 1:
        raise ParameterError(f"m must be a positive integer, got {m!r}")
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha!r}")


@dataclass(frozen=True, eq=False)
class CriticalSchedule:
    """Critical constants for ``m`` ordered hypotheses.

    Either ``values`` holds ``m`` precomputed constants, or ``rule(i, r_prev)``
    gives the constant at 1-based position ``i`` after ``r_prev`` rejections.
    """

    m: int
    values: Optional[np.ndarray] = None
    rule: Optional[Callable[[int, int], float]] = field(default=None, repr=False)

    def __post_init__(self):
        if (self.values is None) == (self.rule is None):
            raise ParameterError("exactly one of values or rule must be given")
        if self.values is not None:
            values = np.array(self.values, dtype=float)
            if values.shape != (self.m,):
                raise ParameterError("schedule length does not match m")
            values.setflags(write=False)
            object.__setattr__(self, "values", values)

    @property
    def adaptive(self) -> bool:
        return self.rule is not None

    def threshold(self, i: int, r_prev: int) -> float:
        if self.values is not None:
            return float(self.values[i - 1])
        return self.rule(i, r_prev)


def crit_arbitrary(m: int, alpha: float) -> CriticalSchedule:
    """Constants ``min(m*alpha/(m-i+1), 1)``; FDR control under any dependence."""
    _check_m_alpha(m, alpha)
    i = np.arange(1, m + 1)
    # alpha * (m / (m-i+1)) keeps the i=1 constant equal to alpha bit-for-bit
    values = np.minimum(alpha * (m / (m - i + 1)), 1.0)
    return CriticalSchedule(m, values=values)


def crit_negassoc(m: int, alpha: float) -> CriticalSchedule:
    """Constants ``i*alpha/(1+(i-1)*alpha)`` for negatively associated nulls."""
    _check_m_alpha(m, alpha)
    i = np.arange(1, m + 1)
    return CriticalSchedule(m, values=i * alpha / (1 + (i - 1) * alpha))


def crit_k_arbitrary(m: int, alpha: float, k: int) -> CriticalSchedule:
    """Constants for stopping at the ``k``-th acceptance under any dependence.

    No cap at 1 is applied; constants above 1 behave like 1 since p-values
    never exceed 1.
    """
    _check_m_alpha(m, alpha)
    if int(k) != k or not 1 <= k <= m:
        raise ParameterError(f"k must satisfy 1 <= k <= m={m}, got {k!r}")
    i = np.arange(1, m + 1)
    tail = alpha * ((m - k + 1) / ((m - i + 1) * k))
    return CriticalSchedule(m, values=np.where(i <= k, alpha / k, tail))


def crit_k_adaptive(i: int, r_prev: int, alpha: float, k: int) -> float:
    """Constant ``(r_prev+1)*alpha / (k + (i-k)*alpha)`` at position ``i``.

    Valid under independence of the true null p-values.  ``r_prev`` is the
    number of rejections among the first ``i-1`` tested hypotheses.
    """
    if not 0 <= r_prev <= i - 1:
        raise RuntimeError(f"rejection count {r_prev} impossible before position {i}")
    return (r_prev + 1) * alpha / (k + (i - k) * alpha)


def schedule_for(spec: ProcedureSpec, m: int) -> CriticalSchedule:
    """Build the critical schedule of a fixed-sequence ``spec`` for ``m`` tests."""
    if not spec.kind.is_fixed_sequence:
        raise ParameterError(f"{spec.kind.value} is not a fixed-sequence procedure")
    if spec.k > m:
        raise ParameterError(f"k={spec.k} exceeds the number of hypotheses m={m}")
    if spec.kind is ProcedureKind.ARBITRARY:
        return crit_arbitrary(m, spec.alpha)
    if spec.kind is ProcedureKind.NEG_ASSOC:
        return crit_negassoc(m, spec.alpha)
    if spec.kind is ProcedureKind.K_ARBITRARY:
        return crit_k_arbitrary(m, spec.alpha, spec.k)
    alpha, k = spec.alpha, spec.k
    return CriticalSchedule(m, rule=lambda i, r: crit_k_adaptive(i, r, alpha, k))


@dataclass(frozen=True)
class TestOutcome:
    """Decisions of one procedure run.

    ``decisions`` and ``thresholds`` are indexed like the input p-values
    (``thresholds`` is NaN where a hypothesis was not tested).  ``stop_index``
    counts the tested positions, so it equals ``m`` when testing never halted
    early.  ``order``, when set, is the 0-based testing order of the input
    hypotheses; ``stop_index`` then refers to positions in that order.
    """

    __test__ = False  # keep pytest from collecting this class

    decisions: tuple
    thresholds: tuple
    rejection_count: int
    acceptance_count: int
    stop_index: int
    order: Optional[tuple] = None

    @property
    def m(self) -> int:
        return len(self.decisions)

    @property
    def rejected(self) -> np.ndarray:
        return np.array([d is Decision.REJECTED for d in self.decisions], dtype=bool)

    @property
    def tested(self) -> np.ndarray:
        return np.array([d is not Decision.UNTESTED for d in self.decisions], dtype=bool)


def run_with_schedule(p, schedule: CriticalSchedule, k: int = 1) -> TestOutcome:
    """Step through ``p`` in order, stopping right after the ``k``-th acceptance.

    Ties ``p_i == threshold`` count as rejections.
    """
    p = as_pvalues(p)
    m = p.size
    if schedule.m != m:
        raise ParameterError(f"schedule built for m={schedule.m}, got {m} p-values")
    if not 1 <= k <= m:
        raise ParameterError(f"k must satisfy 1 <= k <= m={m}, got {k!r}")
    decisions = [Decision.UNTESTED] * m
    thresholds = [float("nan")] * m
    rejections = acceptances = 0
    stop = m
    for pos in range(m):
        thr = schedule.threshold(pos + 1, rejections)
        thresholds[pos] = thr
        if p[pos] <= thr:
            decisions[pos] = Decision.REJECTED
            rejections += 1
        else:
            decisions[pos] = Decision.ACCEPTED
            acceptances += 1
            if acceptances == k:
                stop = pos + 1
                break
    return TestOutcome(tuple(decisions), tuple(thresholds), rejections, acceptances, stop)


def run_fixed_sequence(p, spec: ProcedureSpec) -> TestOutcome:
    """Run one of the four fixed-sequence procedures on p-values in testing order."""
    p = as_pvalues(p)
    return run_with_schedule(p, schedule_for(spec, p.size), spec.k)


def run_procedure(p, spec: ProcedureSpec) -> TestOutcome:
    """Dispatch to the fixed-sequence engine or to the BH/BY step-up baselines."""
    if spec.kind.is_fixed_sequence:
        return run_fixed_sequence(p, spec)
    from .baselines import run_bh, run_by

    return run_bh(p, spec.alpha) if spec.kind is ProcedureKind.BH else run_by(p, spec.alpha)


def batch_fixed_sequence(P, spec: ProcedureSpec) -> np.ndarray:
    """Vectorised engine: rejection mask for each row of a ``(B, m)`` array.

    Gives the same decisions as :func:`run_fixed_sequence` applied row by row.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2:
        raise ParameterError("expected a two-dimensional array of p-values")
    B, m = P.shape
    schedule = schedule_for(spec, m)
    k, alpha = spec.k, spec.alpha
    rejected = np.zeros((B, m), dtype=bool)
    rejections = np.zeros(B, dtype=np.int64)
    acceptances = np.zeros(B, dtype=np.int64)
    for pos in range(m):
        active = acceptances < k
        if not active.any():
            break
        i = pos + 1
        if schedule.adaptive:
            thr = (rejections + 1) * alpha / (k + (i - k) * alpha)
        else:
            thr = schedule.values[pos]
        hit = active & (P[:, pos] <= thr)
        rejected[:, pos] = hit
        rejections += hit
        acceptances += active & ~hit
    return rejected


def reject_batch(P, spec: ProcedureSpec) -> np.ndarray:
    """Rejection mask for each row of ``P`` under any supported procedure."""
    if spec.kind.is_fixed_sequence:
        return batch_fixed_sequence(P, spec)
    from .baselines import batch_step_up

    return batch_step_up(P, spec.alpha, dependent=spec.kind is ProcedureKind.BY)
