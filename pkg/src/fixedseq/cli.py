"""Command line entry point: ``fixedseq {test,order,simulate,constants,verify}``.

Exit codes: 0 success, 2 parse or parameter error, 3 numerical failure.
The thread count for ``simulate`` comes from ``FIXEDSEQ_THREADS`` (default 1).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io as fio
from . import oracle
from .exceptions import FixedSequenceError, NumericalError, OracleScopeError
from .ordering import StatisticKind, order_then_test
from .procedures import (
    ProcedureKind,
    ProcedureSpec,
    crit_arbitrary,
    crit_k_arbitrary,
    crit_negassoc,
    run_procedure,
)
from .simulation import SimulationConfig, estimate, monte_carlo_fdr

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


def _spec(args) -> ProcedureSpec:
    kind = ProcedureKind.parse(args.procedure)
    return ProcedureSpec(kind, args.alpha, args.k if kind.uses_k else 1)


def _emit(args, text, inputs=(), seed=None):
    fio.write_text(args.out, text)
    if args.out != "-":
        fio.write_json(fio.manifest_path(args.out), fio.build_manifest(args.argv, inputs, seed))


def cmd_test(args):
    p = fio.read_pvalues(args.pvalues, args.column)
    outcome = run_procedure(p, _spec(args))
    _emit(args, fio.decision_table(outcome, p), [args.pvalues])


def cmd_order(args):
    kind = StatisticKind(args.stat)
    data = fio.read_matrix(args.matrix, two_sample=kind.two_sample)
    spec = _spec(args)
    plan, outcome = order_then_test(data, kind, spec, args.alternative)
    _emit(args, fio.order_table(plan, outcome, data, spec.label), [args.matrix])


def cmd_constants(args):
    m, alpha = args.m, args.alpha
    cols = {
        "arbitrary": crit_arbitrary(m, alpha).values,
        "negassoc": crit_negassoc(m, alpha).values,
        f"k_arbitrary(k={args.k})": crit_k_arbitrary(m, alpha, args.k).values,
        "fwer": np.full(m, alpha),
    }
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i"] + list(cols))
    for i in range(m):
        w.writerow([i + 1] + [f"{c[i]:.6g}" for c in cols.values()])
    _emit(args, buf.getvalue())


def cmd_simulate(args):
    with open(args.config) as fh:
        try:
            cfg = SimulationConfig.from_dict(json.load(fh))
        except (json.JSONDecodeError, TypeError) as exc:
            raise fio.ParseError(f"{args.config}: {exc}") from exc
    jobs = int(os.environ.get("FIXEDSEQ_THREADS", "1"))
    report = estimate(cfg, n_jobs=jobs)
    out = Path(args.out_dir)
    fio.write_text(out / "report.csv", fio.report_table(report))
    plots = fio.plot_tables(report)
    fio.write_text(out / "fdr_vs_k.csv", plots["fdr"])
    fio.write_text(out / "power_vs_k.csv", plots["power"])
    fio.write_json(out / "config.json", {"config": cfg.to_dict(), "mu": report.mu})
    fio.write_json(out / "manifest.json", fio.build_manifest(args.argv, [args.config], cfg.seed))
    print(f"wrote {len(report.rows)} rows to {out / 'report.csv'}")


def cmd_verify(args):
    with open(args.config) as fh:
        try:
            config = oracle.DependencyConfig.from_dict(json.load(fh))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise fio.ParseError(f"{args.config}: {exc}") from exc
    spec = _spec(args)
    results = {"procedure": spec.label, "alpha": spec.alpha, "m": config.m}
    routes = {
        "dynamic_program": oracle.exact_fdr_dp,
        "enumeration": oracle.exact_fdr_enumeration,
        "rejection_tails": oracle.fdr_from_rejection_tails,
        "one_dimensional": oracle.exact_fdr_one_dimensional,
    }
    exact = {}
    for name, fn in routes.items():
        try:
            exact[name] = fn(config, spec)
        except OracleScopeError as exc:
            results.setdefault("skipped", {})[name] = str(exc)
    results["exact"] = exact
    if args.reps or not exact:
        reps = args.reps or 100_000
        (fdr, se), = monte_carlo_fdr(lambda rng, size: oracle.sample_config(config, rng, size),
                                     [spec], reps, args.seed)
        results["monte_carlo"] = {"fdr": fdr, "se": se, "replications": reps, "seed": args.seed}
    values = list(exact.values())
    results["routes_agree"] = bool(values) and max(values) - min(values) <= 1e-12
    _emit(args, json.dumps(results, indent=2, sort_keys=True) + "\n", [args.config], args.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fixedseq", description="Fixed-sequence FDR procedures.")
    sub = parser.add_subparsers(dest="command", required=True)

    def procedure_args(p, default="arbitrary"):
        p.add_argument("--procedure", default=default,
                       help="arbitrary | negassoc | k_arbitrary | k_adaptive | bh | by (or p1..p4)")
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--k", type=int, default=1, help="acceptance budget for k_* procedures")
        p.add_argument("--out", default="-", help="output file (default stdout)")

    p = sub.add_parser("test", help="run a procedure on p-values already in testing order")
    p.add_argument("pvalues")
    p.add_argument("--column", help="CSV column holding p-values (default: pvalue)")
    procedure_args(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("order", help="order variables by a data statistic, then test")
    p.add_argument("matrix")
    p.add_argument("--stat", required=True, choices=[k.value for k in StatisticKind])
    p.add_argument("--alternative", default="two-sided", choices=["two-sided", "greater"])
    procedure_args(p, default="k_adaptive")
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("simulate", help="Monte Carlo FDR and power study from a JSON config")
    p.add_argument("config")
    p.add_argument("--out-dir", default="simulation_out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("constants", help="table of critical constants")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("verify", help="exact FDR of a procedure under a JSON dependency config")
    p.add_argument("config")
    p.add_argument("--reps", type=int, default=0, help="also run this many Monte Carlo replications")
    p.add_argument("--seed", type=int, default=0)
    procedure_args(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    args.argv = ["fixedseq"] + argv
    try:
        args.func(args)
    except NumericalError as exc:
        print(f"fixedseq: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FixedSequenceError, OSError) as exc:
        print(f"fixedseq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
