"""Exact FDR of fixed-sequence procedures on small, fully specified p-value laws.

A :class:`DependencyConfig` fixes which hypotheses are true nulls, the
marginal law of each p-value and how the uniform true-null p-values are
coupled.  Several independent routes compute the same FDR:

* :func:`exact_fdr_dp` - forward dynamic program over (rejections, false
  rejections, acceptances), independent coupling only;
* :func:`exact_fdr_enumeration` - brute-force sum over every outcome of
  discrete marginals;
* :func:`fdr_from_rejection_tails` - the conventional-procedure identity
  ``FDR = sum_i d_i P(R >= i)``;
* :func:`exact_fdr_one_dimensional` - integration over a single shared
  uniform draw (shared and antithetic couplings);

plus closed forms for the configurations used to study optimality.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .baselines import step_up_constants
from .exceptions import OracleScopeError, ParameterError
from .procedures import (
    ProcedureKind,
    ProcedureSpec,
    crit_arbitrary,
    crit_negassoc,
    run_procedure,
    schedule_for,
)

__all__ = [
    "Uniform01",
    "PointMass",
    "TwoPoint",
    "Coupling",
    "DependencyConfig",
    "DP_MAX_M",
    "ENUMERATION_MAX_M",
    "exact_fdr_dp",
    "exact_fdr_enumeration",
    "fdr_from_rejection_tails",
    "exact_fdr_one_dimensional",
    "exact_fdr",
    "sample_config",
    "analytic_lfc_value",
    "negassoc_perfect_order_fdr",
    "negassoc_asymptotic_lower_bound",
    "antithetic_adaptive_fdr",
]

DP_MAX_M = 25
ENUMERATION_MAX_M = 6


@dataclass(frozen=True)
class Uniform01:
    def cdf(self, t):
        return min(max(t, 0.0), 1.0)

    def support(self):
        return None


@dataclass(frozen=True)
class PointMass:
    value: float = 0.0

    def __post_init__(self):
        if not 0 <= self.value <= 1:
            raise ParameterError(f"point mass must lie in [0, 1], got {self.value}")

    def cdf(self, t):
        return 1.0 if self.value <= t else 0.0

    def support(self):
        return [(self.value, 1.0)]


@dataclass(frozen=True)
class TwoPoint:
    """``v1`` with probability ``p1``, otherwise ``v2``."""

    v1: float
    p1: float
    v2: float

    def __post_init__(self):
        if not (0 <= self.v1 <= 1 and 0 <= self.v2 <= 1 and 0 <= self.p1 <= 1):
            raise ParameterError("two-point law needs values and probability in [0, 1]")

    def cdf(self, t):
        return (self.p1 if self.v1 <= t else 0.0) + ((1 - self.p1) if self.v2 <= t else 0.0)

    def support(self):
        return [(self.v1, self.p1), (self.v2, 1 - self.p1)]


class Coupling(str, enum.Enum):
    INDEPENDENT = "independent"
    SHARED_UNIFORM = "shared_uniform"
    ANTITHETIC = "antithetic"


@dataclass(frozen=True)
class DependencyConfig:
    """Truth mask, per-hypothesis marginal laws and the coupling of uniform nulls.

    Under ``SHARED_UNIFORM`` every true null is ``Uniform01`` and all of them
    equal one uniform draw; other positions are independent.  ``ANTITHETIC``
    is the two-null law ``P2 = 1 - P1``.
    """

    true_null: tuple
    marginals: tuple
    coupling: Coupling = Coupling.INDEPENDENT

    def __post_init__(self):
        object.__setattr__(self, "true_null", tuple(bool(t) for t in self.true_null))
        object.__setattr__(self, "marginals", tuple(self.marginals))
        object.__setattr__(self, "coupling", Coupling(self.coupling))
        if len(self.true_null) != len(self.marginals) or not self.true_null:
            raise ParameterError("truth mask and marginals must be nonempty and of equal length")
        uniform = [isinstance(law, Uniform01) for law in self.marginals]
        if self.coupling is Coupling.SHARED_UNIFORM:
            if any(t != u for t, u in zip(self.true_null, uniform)):
                raise ParameterError("shared-uniform coupling needs Uniform01 exactly at the true nulls")
        elif self.coupling is Coupling.ANTITHETIC:
            if self.m != 2 or not all(self.true_null) or not all(uniform):
                raise ParameterError("antithetic coupling needs two uniform true nulls")

    @property
    def m(self) -> int:
        return len(self.true_null)

    @property
    def m0(self) -> int:
        return sum(self.true_null)

    @property
    def discrete(self) -> bool:
        return all(law.support() is not None for law in self.marginals)

    @classmethod
    def from_dict(cls, data: dict) -> "DependencyConfig":
        laws = []
        for spec in data["marginals"]:
            law = spec.get("law")
            if law == "uniform":
                laws.append(Uniform01())
            elif law == "point_mass":
                laws.append(PointMass(float(spec.get("value", 0.0))))
            elif law == "two_point":
                laws.append(TwoPoint(float(spec["v1"]), float(spec["p1"]), float(spec["v2"])))
            else:
                raise ParameterError(f"unknown marginal law {law!r}")
        return cls(data["true_null"], laws, data.get("coupling", "independent"))

    def to_dict(self) -> dict:
        laws = []
        for law in self.marginals:
            if isinstance(law, Uniform01):
                laws.append({"law": "uniform"})
            elif isinstance(law, PointMass):
                laws.append({"law": "point_mass", "value": law.value})
            else:
                laws.append({"law": "two_point", "v1": law.v1, "p1": law.p1, "v2": law.v2})
        return {"true_null": list(self.true_null), "marginals": laws, "coupling": self.coupling.value}


def _require_fixed_sequence(spec, m):
    if not spec.kind.is_fixed_sequence:
        raise OracleScopeError(f"{spec.kind.value} is not a fixed-sequence procedure")
    return schedule_for(spec, m)


def exact_fdr_dp(config: DependencyConfig, spec: ProcedureSpec) -> float:
    """Exact FDR by a forward pass over states (rejections, false rejections, acceptances).

    At position ``i`` a live state rejects with probability
    ``F_i(threshold(i, r))``.  Requires independent p-values and ``m <= 25``.
    """
    if config.coupling is not Coupling.INDEPENDENT:
        raise OracleScopeError("the dynamic program needs independent p-values")
    if config.m > DP_MAX_M:
        raise OracleScopeError(f"m={config.m} exceeds the dynamic-program limit {DP_MAX_M}")
    schedule = _require_fixed_sequence(spec, config.m)
    k = spec.k
    states = {(0, 0, 0): 1.0}
    fdr = 0.0
    for pos, (law, null) in enumerate(zip(config.marginals, config.true_null)):
        nxt = {}
        for (r, v, a), prob in states.items():
            q = law.cdf(min(schedule.threshold(pos + 1, r), 1.0))
            if q > 0:
                key = (r + 1, v + null, a)
                nxt[key] = nxt.get(key, 0.0) + prob * q
            if q < 1:
                if a + 1 == k:
                    fdr += prob * (1 - q) * v / max(r, 1)
                else:
                    key = (r, v, a + 1)
                    nxt[key] = nxt.get(key, 0.0) + prob * (1 - q)
        states = nxt
    for (r, v, _), prob in states.items():
        fdr += prob * v / max(r, 1)
    return fdr


def _fdp(pvalues, true_null, spec):
    rejected = run_procedure(pvalues, spec).rejected
    V = int(np.sum(rejected & true_null))
    return V / max(int(rejected.sum()), 1)


def exact_fdr_enumeration(config: DependencyConfig, spec: ProcedureSpec) -> float:
    """Exact FDR by running ``spec`` on every outcome of independent discrete marginals."""
    if config.coupling is not Coupling.INDEPENDENT or not config.discrete:
        raise OracleScopeError("enumeration needs independent discrete marginals")
    if config.m > ENUMERATION_MAX_M:
        raise OracleScopeError(f"m={config.m} exceeds the enumeration limit {ENUMERATION_MAX_M}")
    true_null = np.array(config.true_null)
    total = 0.0
    for combo in itertools.product(*(law.support() for law in config.marginals)):
        prob = math.prod(w for _, w in combo)
        if prob == 0:
            continue
        total += prob * _fdp([v for v, _ in combo], true_null, spec)
    return total


def rejection_tail_weights(true_null) -> np.ndarray:
    """Weights ``d_i`` with ``FDR = sum_i d_i P(R >= i)`` for conventional procedures."""
    d = np.empty(len(true_null))
    m0_prev = m1_prev = 0
    for idx, null in enumerate(true_null):
        i = idx + 1
        if i == 1:
            d[idx] = 1.0 if null else 0.0
        else:
            d[idx] = (m1_prev * null - m0_prev * (not null)) / (i * (i - 1))
        m0_prev += bool(null)
        m1_prev += not null
    return d


def fdr_from_rejection_tails(config: DependencyConfig, spec: ProcedureSpec) -> float:
    """FDR of a conventional (k = 1) procedure as ``sum_i d_i P(R >= i)``.

    Under independence ``P(R >= i)`` is the product of the first ``i``
    rejection probabilities.
    """
    if config.coupling is not Coupling.INDEPENDENT:
        raise OracleScopeError("the rejection-tail form here needs independent p-values")
    schedule = _require_fixed_sequence(spec, config.m)
    if spec.k != 1:
        raise OracleScopeError("the rejection-tail identity holds for conventional procedures (k = 1)")
    d = rejection_tail_weights(config.true_null)
    tail = 1.0
    fdr = 0.0
    for idx, law in enumerate(config.marginals):
        tail *= law.cdf(min(schedule.threshold(idx + 1, idx), 1.0))
        fdr += d[idx] * tail
    return fdr


def _all_constants(spec, m):
    if not spec.kind.is_fixed_sequence:
        return list(step_up_constants(m, spec.alpha, spec.kind is ProcedureKind.BY))
    schedule = schedule_for(spec, m)
    return [schedule.threshold(i, r) for i in range(1, m + 1) for r in range(i)]


def exact_fdr_one_dimensional(config: DependencyConfig, spec: ProcedureSpec) -> float:
    """Exact FDR when all uniform p-values are functions of one uniform draw ``U``.

    Shared coupling sets every true null to ``U``; antithetic sets
    ``(U, 1 - U)``.  Decisions are piecewise constant in ``U`` between the
    critical constants (and their mirror images), so integrating over ``U``
    reduces to a finite sum over those intervals.  Independent discrete
    positions are enumerated on top.
    """
    if config.coupling is Coupling.INDEPENDENT:
        raise OracleScopeError("use exact_fdr_dp for independent p-values")
    m = config.m
    true_null = np.array(config.true_null)
    consts = [min(max(c, 0.0), 1.0) for c in _all_constants(spec, m)]
    cuts = set(consts) | {0.0, 0.5, 1.0}
    if config.coupling is Coupling.ANTITHETIC:
        cuts |= {1.0 - c for c in consts}
    cuts = sorted(cuts)
    coupled = [i for i, law in enumerate(config.marginals) if isinstance(law, Uniform01)]
    others = [i for i in range(m) if i not in coupled]
    supports = [config.marginals[i].support() for i in others]
    total = 0.0
    for combo in itertools.product(*supports):
        weight = math.prod(w for _, w in combo)
        if weight == 0:
            continue
        p = np.zeros(m)
        for i, (v, _) in zip(others, combo):
            p[i] = v
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            u = 0.5 * (lo + hi)
            if config.coupling is Coupling.ANTITHETIC:
                p[coupled] = (u, 1.0 - u)
            else:
                p[coupled] = u
            total += weight * (hi - lo) * _fdp(p, true_null, spec)
    return total


def exact_fdr(config: DependencyConfig, spec: ProcedureSpec) -> float:
    """Route to the dynamic program or the one-dimensional integrator."""
    if config.coupling is Coupling.INDEPENDENT:
        return exact_fdr_dp(config, spec)
    return exact_fdr_one_dimensional(config, spec)


def sample_config(config: DependencyConfig, rng: np.random.Generator, size: int):
    """``(size, m)`` p-value draws from ``config`` and the truth mask."""
    m = config.m
    P = np.empty((size, m))
    shared = rng.random(size)
    for i, law in enumerate(config.marginals):
        if isinstance(law, Uniform01):
            if config.coupling is Coupling.INDEPENDENT:
                P[:, i] = rng.random(size)
            elif config.coupling is Coupling.ANTITHETIC and i == 1:
                P[:, i] = 1.0 - shared
            else:
                P[:, i] = shared
        elif isinstance(law, PointMass):
            P[:, i] = law.value
        else:
            P[:, i] = np.where(rng.random(size) < law.p1, law.v1, law.v2)
    return P, np.array(config.true_null)


# ---------------------------------------------------------------------------
# closed forms


def analytic_lfc_value(m: int, u1: int, alpha: float) -> float:
    """FDR of the arbitrary-dependence procedure under its least favourable law.

    The first ``u1 - 1`` p-values are 0 and the remaining true nulls share
    one uniform draw; the FDR is ``c_{u1} (m - u1 + 1) / m``, equal to
    ``alpha`` whenever ``c_{u1} < 1``.
    """
    if not 1 <= u1 <= m:
        raise ParameterError(f"u1 must satisfy 1 <= u1 <= m, got {u1}")
    c = crit_arbitrary(m, alpha).values[u1 - 1]
    return float(c * (m - u1 + 1) / m)


def negassoc_perfect_order_fdr(m: int, m1: int, alpha: float) -> float:
    """``alpha - (m1*alpha/m) * P(R = m)`` for the negative-association procedure.

    Applies when the ``m1`` false nulls come first with p-value 0 and the
    true nulls are independent uniforms, so ``P(R = m)`` is the product of
    the constants at positions ``m1+1 .. m``.
    """
    if not 0 <= m1 < m:
        raise ParameterError(f"m1 must satisfy 0 <= m1 < m, got {m1}")
    c = crit_negassoc(m, alpha).values
    return float(alpha - m1 * alpha / m * np.prod(c[m1:]))


def negassoc_asymptotic_lower_bound(alpha: float, pi1: float) -> float:
    """Large-``m`` lower bound ``alpha - pi1*alpha*exp(-(1-pi1)(1-alpha)/alpha)``."""
    return alpha - pi1 * alpha * math.exp(-(1 - pi1) * (1 - alpha) / alpha)


def antithetic_adaptive_fdr(alpha: float) -> float:
    """FDR ``alpha/(2-alpha) + alpha/2`` of the adaptive procedure with k = 2 on ``(U, 1-U)``.

    Exceeds ``alpha``: the adaptive constants need independence once k > 1.
    """
    return alpha / (2 - alpha) + alpha / 2
