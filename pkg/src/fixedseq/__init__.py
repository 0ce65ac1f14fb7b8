"""False discovery rate control for hypotheses tested in a fixed sequence."""

__version__ = "0.1.0"

from .baselines import run_bh, run_by
from .exceptions import (
    DegenerateStatisticError,
    FixedSequenceError,
    NumericalError,
    OracleScopeError,
    ParameterError,
    ParseError,
)
from .ordering import DataMatrix, OrderedTestPlan, StatisticKind, build_plan, order_then_test
from .procedures import (
    CriticalSchedule,
    Decision,
    ProcedureKind,
    ProcedureSpec,
    TestOutcome,
    crit_arbitrary,
    crit_k_adaptive,
    crit_k_arbitrary,
    crit_negassoc,
    run_fixed_sequence,
    run_procedure,
)
from .simulation import SimulationConfig, SimulationReport, calibrate_mu, estimate
