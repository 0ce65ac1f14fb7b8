"""Readers and writers for p-value files, expression matrices, decision tables and reports."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .exceptions import ParseError
from .ordering import DataMatrix
from .procedures import Decision

DECISION_COLUMNS = ["position", "hypothesis", "pvalue", "threshold", "decision"]
ORDER_COLUMNS = ["id", "ordering_value", "test_rank", "pvalue", "threshold", "decision"]
REPORT_COLUMNS = ["procedure", "k", "rho", "fdr", "fdr_se", "power", "power_se", "replications", "flags"]


def _fmt(x) -> str:
    """Full-precision float text (shortest repr that round-trips)."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _fmt6(x) -> str:
    return f"{x:.6g}"


def _lines(path):
    if str(path) == "-":
        return sys.stdin.read().splitlines()
    try:
        return Path(path).read_text().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc


def _parse_p(text, line):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text.strip()!r}", line) from None
    if not 0.0 <= value <= 1.0:
        raise ParseError(f"p-value {value!r} outside [0, 1]", line)
    return value


def read_pvalues(path, column=None) -> np.ndarray:
    """P-values from a file with one value per line, or from a CSV column.

    Blank lines and lines starting with ``#`` are skipped.  A file whose first
    content line contains a comma is read as CSV with a header row; the column
    is ``column`` (default ``pvalue``).
    """
    lines = [(n, s) for n, s in enumerate(_lines(path), start=1) if s.strip() and not s.lstrip().startswith("#")]
    if not lines:
        raise ParseError(f"{path}: no p-values found")
    if "," not in lines[0][1]:
        if column is not None:
            raise ParseError(f"{path}: --column given but file is not CSV")
        return np.array([_parse_p(s, n) for n, s in lines])
    header = next(csv.reader([lines[0][1]]))
    header = [h.strip() for h in header]
    name = column or "pvalue"
    if name not in header:
        raise ParseError(f"column {name!r} not in header {header}", lines[0][0])
    idx = header.index(name)
    values = []
    for n, s in lines[1:]:
        cells = next(csv.reader([s]))
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(cells)}", n)
        values.append(_parse_p(cells[idx], n))
    if not values:
        raise ParseError(f"{path}: no p-values found")
    return np.array(values)


def read_matrix(path, two_sample=False) -> DataMatrix:
    """Expression-style CSV: header row, then one row per variable.

    The first column holds identifiers.  In two-sample mode the remaining
    header cells are group labels; there must be exactly two distinct labels
    and the first one encountered marks group 1.
    """
    rows = [(n, s) for n, s in enumerate(_lines(path), start=1) if s.strip() and not s.lstrip().startswith("#")]
    if len(rows) < 2:
        raise ParseError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in next(csv.reader([rows[0][1]]))]
    width = len(header)
    if width < 3:
        raise ParseError("need an identifier column and at least two observation columns", rows[0][0])
    ids, values = [], []
    for n, s in rows[1:]:
        cells = next(csv.reader([s]))
        if len(cells) != width:
            raise ParseError(f"ragged row: expected {width} fields, found {len(cells)}", n)
        ids.append(cells[0].strip())
        try:
            values.append([float(c) for c in cells[1:]])
        except ValueError:
            raise ParseError("non-numeric observation", n) from None
    groups = None
    if two_sample:
        labels = header[1:]
        if any(not lab for lab in labels):
            raise ParseError("missing group label in header", rows[0][0])
        distinct = list(dict.fromkeys(labels))
        if len(distinct) != 2:
            raise ParseError(f"two-sample mode needs exactly 2 group labels, found {distinct}", rows[0][0])
        groups = np.array([lab == distinct[0] for lab in labels])
    return DataMatrix(np.array(values), groups=groups, row_ids=tuple(ids))


def decision_table(outcome, pvalues, ids=None) -> str:
    """CSV table of decisions in testing order plus a trailing summary comment."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DECISION_COLUMNS)
    for pos in range(outcome.m):
        name = ids[pos] if ids is not None else str(pos + 1)
        w.writerow([pos + 1, name, _fmt(pvalues[pos]), _fmt(outcome.thresholds[pos]), outcome.decisions[pos].value])
    buf.write(f"# rejections={outcome.rejection_count} acceptances={outcome.acceptance_count} "
              f"stop_index={outcome.stop_index} m={outcome.m}\n")
    return buf.getvalue()


def read_decision_table(path) -> dict:
    """Parse a table written by :func:`decision_table` or :func:`order_table`.

    Returns the decisions by row plus the rejection count and stop index
    rebuilt from them.
    """
    lines = [s for s in _lines(path) if s.strip() and not s.startswith("#")]
    reader = csv.DictReader(lines)
    decisions = []
    ranks = []
    for rec in reader:
        decisions.append(Decision(rec["decision"]))
        if "test_rank" in rec:
            ranks.append(int(rec["test_rank"]))
    if ranks:
        decisions = [d for _, d in sorted(zip(ranks, decisions))]
    rejections = sum(d is Decision.REJECTED for d in decisions)
    stop_index = sum(d is not Decision.UNTESTED for d in decisions)
    return {"decisions": decisions, "rejection_count": rejections, "stop_index": stop_index}


def order_table(plan, outcome, data: DataMatrix, label: str) -> str:
    """Per-variable table (input row order) with ordering value, rank, p-value and decision."""
    rank = np.empty(data.m, dtype=int)
    rank[plan.permutation] = np.arange(1, data.m + 1)
    ids = data.row_ids or tuple(str(i + 1) for i in range(data.m))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ORDER_COLUMNS)
    for row in range(data.m):
        w.writerow([
            ids[row],
            _fmt(plan.ordering_values[row]),
            int(rank[row]),
            _fmt(plan.row_pvalues[row]),
            _fmt(outcome.thresholds[row]),
            outcome.decisions[row].value,
        ])
    buf.write(f"# summary procedure={label} rejections={outcome.rejection_count} "
              f"stop_index={outcome.stop_index} m={data.m}\n")
    return buf.getvalue()


def report_table(report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in report.rows:
        w.writerow([
            r.procedure, "" if r.k is None else r.k, _fmt6(r.rho),
            _fmt6(r.fdr), _fmt6(r.fdr_se), _fmt6(r.power), _fmt6(r.power_se),
            r.replications, ";".join(r.flags),
        ])
    return buf.getvalue()


def plot_tables(report) -> dict:
    """Wide ``k``-indexed tables of FDR and power, one column per (procedure, rho).

    Procedures without ``k`` (BH, BY, conventional ones) repeat their value on
    every row so each column plots as a horizontal reference line.
    """
    ks = sorted({r.k for r in report.rows if r.k is not None}) or [1]
    series = {}
    for r in report.rows:
        series.setdefault((r.procedure, r.rho), {})[r.k] = r
    keys = list(series)
    out = {}
    for metric in ("fdr", "power"):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k"] + [f"{proc}@rho={_fmt6(rho)}" for proc, rho in keys])
        for k in ks:
            cells = []
            for key in keys:
                by_k = series[key]
                row = by_k.get(k) if k in by_k else by_k.get(None)
                cells.append("" if row is None else _fmt6(getattr(row, metric)))
            w.writerow([k] + cells)
        out[metric] = buf.getvalue()
    return out


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(argv, inputs=(), seed=None) -> dict:
    from . import __version__

    return {
        "command": list(argv),
        "inputs": {str(p): file_digest(p) for p in inputs if str(p) != "-"},
        "seed": seed,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def write_text(path, text):
    if str(path) == "-":
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def write_json(path, obj):
    write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def manifest_path(path) -> str:
    return os.fspath(path) + ".manifest.json"
