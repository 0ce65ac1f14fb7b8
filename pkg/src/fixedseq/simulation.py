"""Monte Carlo estimation of FDR and average power.

Random numbers come from counter-based Philox streams: block ``b`` of
scenario ``s`` under master seed ``seed`` always uses the stream keyed by
``seed`` with counter ``(0, 0, s, b)``.  Replication ``j`` lives in block
``j // block_size``, so results depend only on the configuration and never
on how blocks are scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize, stats

from .exceptions import DegenerateStatisticError, NumericalError, ParameterError
from .ordering import DataMatrix, StatisticKind
from .procedures import ProcedureKind, ProcedureSpec, TestOutcome, reject_batch
from .special import t_sf, t_two_sided_p

__all__ = [
    "DEFAULT_BLOCK_SIZE",
    "stream",
    "block_layout",
    "one_sided_t_power",
    "calibrate_mu",
    "gen_common_corr",
    "gen_lfc_arbitrary",
    "gen_zero_false_nulls",
    "gen_antithetic_pair",
    "fdp_and_power",
    "monte_carlo_fdr",
    "SimulationConfig",
    "ReportRow",
    "SimulationReport",
    "estimate",
]

DEFAULT_BLOCK_SIZE = 1000
_KEY_MASK = (1 << 128) - 1


def stream(seed: int, block: int, scenario: int = 0) -> np.random.Generator:
    """Independent generator for one replication block of one scenario."""
    key = int(seed) & _KEY_MASK
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, scenario, block]))


def block_layout(replications: int, block_size: int):
    """``(block index, size)`` pairs covering ``replications`` in order."""
    return [
        (b, min(block_size, replications - b * block_size))
        for b in range(math.ceil(replications / block_size))
    ]


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(0 if seed is None else seed, 0)


# ---------------------------------------------------------------------------
# effect size calibration


def one_sided_t_power(mu, n, level):
    """Power of the level-``level`` one-sided one-sample t test when the mean is ``mu`` (sd 1)."""
    crit = stats.t.isf(level, n - 1)
    return stats.nct.sf(crit, n - 1, mu * math.sqrt(n))


def calibrate_mu(n: int, level: float = 0.05, target_power: float = 0.75) -> float:
    """Mean shift (unit variance) at which the one-sided t test has ``target_power``.

    Solved by bracketed root finding on the noncentral t survival function;
    the achieved power matches the target to 1e-9.
    """
    if n < 2:
        raise ParameterError(f"n must be at least 2, got {n}")
    if not (0 < level < 1 and 0 < target_power < 1):
        raise ParameterError("level and target_power must lie in (0, 1)")
    if target_power < level:
        raise ParameterError("target_power below the test level needs a negative shift")
    if math.isclose(target_power, level, rel_tol=0, abs_tol=1e-12):
        return 0.0

    def gap(mu):
        return one_sided_t_power(mu, n, level) - target_power

    hi = 1.0
    while gap(hi) < 0:
        hi *= 2
        if hi > 1e6:
            raise NumericalError(f"could not bracket the root (n={n}, power={target_power})")
    mu, info = optimize.brentq(gap, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, full_output=True)
    residual = abs(gap(mu))
    if not info.converged or residual > 1e-9:
        raise NumericalError(
            f"root finding failed: converged={info.converged}, iterations={info.iterations}, "
            f"mu={mu!r}, power residual={residual:.3g}"
        )
    return float(mu)


# ---------------------------------------------------------------------------
# data and p-value generators


def _common_corr_block(rng, size, m, n, rho, mu):
    """``(size, m, n)`` array; column ``j`` of each matrix is one correlated m-vector."""
    shared = rng.standard_normal((size, 1, n))
    noise = rng.standard_normal((size, m, n))
    return np.asarray(mu, dtype=float).reshape(1, m, 1) + math.sqrt(rho) * shared + math.sqrt(1 - rho) * noise


def gen_common_corr(m, n, rho, mu, seed=None) -> DataMatrix:
    """``n`` draws of an m-vector with unit variances, common correlation ``rho`` and mean ``mu``.

    Built from one shared factor per draw, ``mu + sqrt(rho)*W + sqrt(1-rho)*eps``.
    Rows of the returned matrix are variables, columns are draws.
    """
    if not 0 <= rho < 1:
        raise ParameterError(f"rho must lie in [0, 1), got {rho!r}")
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (m,))
    return DataMatrix(_common_corr_block(_rng(seed), 1, m, n, rho, mu)[0])


def gen_lfc_arbitrary(m, u1, seed=None, size=None):
    """Least favourable configuration for the arbitrary-dependence procedure.

    The first ``u1 - 1`` hypotheses are false with p-value 0; the remaining
    true nulls all share one uniform draw.  Returns ``(pvalues, true_null)``;
    ``pvalues`` has shape ``(m,)`` or ``(size, m)``.
    """
    if not 1 <= u1 <= m:
        raise ParameterError(f"u1 must satisfy 1 <= u1 <= m, got {u1}")
    rng = _rng(seed)
    B = 1 if size is None else size
    u = rng.random((B, 1))
    P = np.concatenate([np.zeros((B, u1 - 1)), np.repeat(u, m - u1 + 1, axis=1)], axis=1)
    mask = np.arange(m) >= u1 - 1
    return (P[0] if size is None else P), mask


def gen_zero_false_nulls(m, m1, seed=None, size=None):
    """First ``m1`` hypotheses false with p-value 0, the rest independent uniform true nulls."""
    if not 0 <= m1 < m:
        raise ParameterError(f"m1 must satisfy 0 <= m1 < m, got {m1}")
    rng = _rng(seed)
    B = 1 if size is None else size
    P = np.concatenate([np.zeros((B, m1)), rng.random((B, m - m1))], axis=1)
    mask = np.arange(m) >= m1
    return (P[0] if size is None else P), mask


def gen_antithetic_pair(seed=None, size=None):
    """Two true nulls with ``P2 = 1 - P1`` and ``P1`` uniform."""
    rng = _rng(seed)
    B = 1 if size is None else size
    p1 = rng.random(B)
    P = np.column_stack([p1, 1.0 - p1])
    mask = np.ones(2, dtype=bool)
    return (P[0] if size is None else P), mask


# ---------------------------------------------------------------------------
# error rates


def fdp_and_power(outcome, true_null):
    """False discovery proportion ``V/max(R,1)`` and power ``S/m1`` of one run.

    ``outcome`` is a :class:`TestOutcome` or a boolean rejection mask.  With no
    false nulls the power is reported as 0.
    """
    rejected = outcome.rejected if isinstance(outcome, TestOutcome) else np.asarray(outcome, dtype=bool)
    true_null = np.asarray(true_null, dtype=bool)
    if rejected.shape != true_null.shape:
        raise ParameterError("outcome and truth mask differ in length")
    V = int(np.sum(rejected & true_null))
    S = int(np.sum(rejected & ~true_null))
    m1 = int(np.sum(~true_null))
    return V / max(V + S, 1), (S / m1 if m1 else 0.0)


def _batch_rates(rejected, true_null):
    V = np.sum(rejected & true_null, axis=1)
    R = np.sum(rejected, axis=1)
    m1 = np.sum(~true_null, axis=-1)
    fdp = V / np.maximum(R, 1)
    power = (R - V) / np.maximum(m1, 1)
    return fdp, power


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()), 0.0, True
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), False


def monte_carlo_fdr(sampler: Callable, specs, replications: int, seed: int,
                    block_size: int = DEFAULT_BLOCK_SIZE, n_jobs: int = 1):
    """Monte Carlo FDR of each spec under ``sampler(rng, size) -> (P, true_null)``.

    All specs see the same draws.  Returns a list of ``(fdr, se)`` pairs.
    """
    specs = list(specs)

    def run(block):
        b, size = block
        P, mask = sampler(stream(seed, b), size)
        return [_batch_rates(reject_batch(P, s), mask)[0] for s in specs]

    parts = _map(run, block_layout(replications, block_size), n_jobs)
    out = []
    for j in range(len(specs)):
        mean, se, _ = _mean_se(np.concatenate([p[j] for p in parts]))
        out.append((mean, se))
    return out


def _map(fn, items, n_jobs):
    if n_jobs is None or n_jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# full simulation study


@dataclass(frozen=True)
class SimulationConfig:
    """One simulation study over a grid of correlations and acceptance budgets.

    ``procedures`` holds procedure kinds (expanded over ``k_grid`` when they
    use ``k``) or explicit :class:`ProcedureSpec` objects.  The first
    ``m - m0`` hypotheses are false nulls before any data-driven reordering.
    """

    m: int
    m0: int
    n: int = 10
    rho: Sequence[float] = (0.0,)
    alpha: float = 0.05
    k_grid: Sequence[int] = (1,)
    procedures: Sequence = ("k_arbitrary", "k_adaptive", "bh", "by")
    replications: int = 2000
    seed: int = 0
    ordering: Optional[str] = "one_sample_t"
    alternative: str = "greater"
    target_power: float = 0.75
    power_level: float = 0.05
    mu: Optional[float] = None
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        rho = self.rho
        rho = (float(rho),) if np.isscalar(rho) else tuple(float(r) for r in rho)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "k_grid", tuple(int(k) for k in self.k_grid))
        object.__setattr__(self, "procedures", tuple(self.procedures))
        if self.m < 1 or not 0 <= self.m0 <= self.m:
            raise ParameterError(f"need m >= 1 and 0 <= m0 <= m, got m={self.m}, m0={self.m0}")
        if self.n < 2:
            raise ParameterError("n must be at least 2")
        if any(not 0 <= r < 1 for r in rho):
            raise ParameterError("every rho must lie in [0, 1)")
        if self.replications < 1 or self.block_size < 1:
            raise ParameterError("replications and block_size must be positive")
        if not 0 < self.alpha < 1:
            raise ParameterError("alpha must lie in (0, 1)")
        if any(not 1 <= k <= self.m for k in self.k_grid):
            raise ParameterError("every k in k_grid must satisfy 1 <= k <= m")
        if self.ordering is not None and StatisticKind(self.ordering) is not StatisticKind.ONE_SAMPLE_T:
            raise ParameterError("simulation supports only the one_sample_t (sum of squares) ordering")
        if self.alternative not in ("greater", "two-sided"):
            raise ParameterError(f"unknown alternative {self.alternative!r}")
        self.specs()  # validates procedure names early

    @property
    def m1(self) -> int:
        return self.m - self.m0

    def specs(self):
        out = []
        for proc in self.procedures:
            if isinstance(proc, ProcedureSpec):
                out.append(proc)
                continue
            kind = ProcedureKind.parse(proc)
            if kind.uses_k:
                out.extend(ProcedureSpec(kind, self.alpha, k) for k in self.k_grid)
            else:
                out.append(ProcedureSpec(kind, self.alpha))
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown simulation config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rho"] = list(self.rho)
        d["k_grid"] = list(self.k_grid)
        d["procedures"] = [p.label if isinstance(p, ProcedureSpec) else str(p) for p in self.procedures]
        return d


@dataclass(frozen=True)
class ReportRow:
    procedure: str
    k: Optional[int]
    rho: float
    fdr: float
    fdr_se: float
    power: float
    power_se: float
    replications: int
    flags: tuple = ()


@dataclass(frozen=True)
class SimulationReport:
    config: SimulationConfig
    mu: float
    rows: tuple = field(default_factory=tuple)

    def row(self, procedure, k=None, rho=0.0) -> ReportRow:
        kind = ProcedureKind.parse(procedure).value
        for r in self.rows:
            if r.procedure == kind and r.k == k and r.rho == rho:
                return r
        raise KeyError((procedure, k, rho))


def _pvalues_block(rng, size, cfg: SimulationConfig, rho, mu_vec, true_null):
    X = _common_corr_block(rng, size, cfg.m, cfg.n, rho, mu_vec)
    n = cfg.n
    mean = X.mean(axis=2)
    sd = X.std(axis=2, ddof=1)
    if np.any(sd == 0):
        raise DegenerateStatisticError("simulated row with zero variance")
    t = math.sqrt(n) * mean / sd
    P = t_sf(t, n - 1) if cfg.alternative == "greater" else t_two_sided_p(t, n - 1)
    mask = np.broadcast_to(true_null, P.shape)
    if cfg.ordering is not None:
        y = np.sum(X * X, axis=2)
        order = np.argsort(-y, axis=1, kind="stable")
        P = np.take_along_axis(P, order, axis=1)
        mask = np.take_along_axis(mask, order, axis=1)
    return P, mask


def estimate(config: SimulationConfig, n_jobs: int = 1) -> SimulationReport:
    """Run the study; one report row per (procedure, k, rho).

    Every procedure is applied to the same simulated data within a
    replication.  FDR and power are averaged over replications with standard
    errors ``sd / sqrt(replications)``.
    """
    cfg = config
    mu = cfg.mu if cfg.mu is not None else calibrate_mu(cfg.n, cfg.power_level, cfg.target_power)
    true_null = np.arange(cfg.m) >= cfg.m1
    mu_vec = np.where(true_null, 0.0, mu)
    specs = cfg.specs()
    layout = block_layout(cfg.replications, cfg.block_size)
    rows = []
    for s_idx, rho in enumerate(cfg.rho):

        def run(block):
            b, size = block
            P, mask = _pvalues_block(stream(cfg.seed, b, s_idx), size, cfg, rho, mu_vec, true_null)
            return [_batch_rates(reject_batch(P, s), mask) for s in specs]

        parts = _map(run, layout, n_jobs)
        for j, spec in enumerate(specs):
            fdp = np.concatenate([p[j][0] for p in parts])
            power = np.concatenate([p[j][1] for p in parts])
            fdr, fdr_se, se_flag = _mean_se(fdp)
            pw, pw_se, _ = _mean_se(power)
            flags = []
            if se_flag:
                flags.append("se_undefined")
            if cfg.m1 == 0:
                flags.append("power_undefined")
                pw, pw_se = 0.0, 0.0
            rows.append(ReportRow(
                procedure=spec.kind.value,
                k=spec.k if spec.kind.uses_k else None,
                rho=rho,
                fdr=fdr,
                fdr_se=fdr_se,
                power=pw,
                power_se=pw_se,
                replications=cfg.replications,
                flags=tuple(flags),
            ))
    return SimulationReport(cfg, float(mu), tuple(rows))
