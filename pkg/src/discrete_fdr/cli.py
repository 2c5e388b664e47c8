"""Command-line front end.

    discrete-fdr analyze COUNTS.csv     count data -> Fisher p-values -> adjusted p-values
    discrete-fdr adjust PVALUES.csv     adjust precomputed p-values (optionally with their nulls)
    discrete-fdr simulate GRID.json     Monte Carlo power table
    discrete-fdr oracle DISTS.tsv       exact FDR / FWER by enumeration
    discrete-fdr gfun ...               G against n*x on a grid, for plotting

Bundled fixtures can be named instead of paths: ``counterexample-n4``,
``counterexample-n10`` (distribution files), ``desk`` (simulation grid) and
``synthetic`` (count data).
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from . import sim
from .dist import DiscretePValueDist, DistRecord, Sidedness, pvalue_table, read_dists, write_dists
from .errors import DomainError
from .oracle import DEFAULT_CAP, PointMassDist, exact_error_rates, format_trace
from .procedures import CONTINUOUS_METHODS, DISCRETE_METHODS, METHODS, apply, format_outcome_table
from .stepfun import StepFunction, aggregate, format_grid, ratio_grid

BUNDLED = {
    "counterexample-n4": "counterexample_n4.tsv",
    "counterexample-n10": "counterexample_n10.tsv",
    "desk": "desk_grid.json",
    "synthetic": "synthetic_counts.csv",
}


class UsageError(Exception):
    """Bad combination of arguments; reported like an argparse error."""


def resolve(name: str) -> Path:
    if name in BUNDLED:
        return Path(str(resources.files("discrete_fdr") / "data" / BUNDLED[name]))
    return Path(name)


# --- input files --------------------------------------------------------------


@dataclass(frozen=True)
class CountRecord:
    id: str
    event_count: int
    total_count: int


def _rows(path: Path, required: Sequence[str]):
    """Yield (line number, row dict) for a CSV with a header naming ``required``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DomainError(f"{path}: empty file")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise DomainError(f"{path}: header must contain {', '.join(required)}; missing {', '.join(missing)}")
        for row in reader:
            yield reader.line_num, row


def read_counts(path: Path) -> list[CountRecord]:
    records, seen = [], set()
    for line, row in _rows(path, ("id", "event_count", "total_count")):
        try:
            rec = CountRecord(row["id"], int(row["event_count"]), int(row["total_count"]))
        except (TypeError, ValueError):
            raise DomainError(f"{path}: line {line}: counts must be integers") from None
        if not rec.id:
            raise DomainError(f"{path}: line {line}: empty id")
        if rec.event_count < 0 or rec.event_count > rec.total_count:
            raise DomainError(f"{path}: line {line}: need 0 <= event_count <= total_count")
        if rec.id in seen:
            raise DomainError(f"{path}: line {line}: duplicate id {rec.id!r}")
        seen.add(rec.id)
        records.append(rec)
    if not records:
        raise DomainError(f"{path}: no records")
    return records


def read_pvalues(path: Path) -> tuple[list[str], np.ndarray]:
    ids, values = [], []
    for line, row in _rows(path, ("id", "pvalue")):
        try:
            p = float(row["pvalue"])
        except (TypeError, ValueError):
            raise DomainError(f"{path}: line {line}: p-value is not a number") from None
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"{path}: line {line}: p-value {p} outside [0, 1]")
        ids.append(row["id"])
        values.append(p)
    if not ids:
        raise DomainError(f"{path}: no records")
    if len(set(ids)) != len(ids):
        raise DomainError(f"{path}: duplicate ids")
    return ids, np.array(values)


def pooled_tests(
    records: Sequence[CountRecord], sidedness: Sidedness = "one"
) -> tuple[np.ndarray, list[DiscretePValueDist]]:
    """Fisher p-values and their null distributions, each record against all others.

    Record i gives the table (a, A - a; n_i - a, B - (n_i - a)) with a its
    event count, n_i its total, A all events and B all non-events. Records
    sharing n_i share a null distribution.
    """
    A = sum(r.event_count for r in records)
    if A == 0:
        raise DomainError("no events in any record; every table is degenerate")
    B = sum(r.total_count for r in records) - A
    pvalues = np.empty(len(records))
    dists = []
    cache: dict[int, DiscretePValueDist] = {}
    for i, r in enumerate(records):
        table = pvalue_table(A, B, r.total_count, sidedness)
        pvalues[i] = table.pvalues[r.event_count - table.lo]
        if r.total_count not in cache:
            cache[r.total_count] = DiscretePValueDist(table.support, table.cdf)
        dists.append(cache[r.total_count])
    return pvalues, dists


# --- output -------------------------------------------------------------------


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _methods(arg: str | None, default: Sequence[str]) -> list[str]:
    if arg is None:
        return list(default)
    names = [m.strip() for m in arg.split(",") if m.strip()]
    unknown = [m for m in names if m not in METHODS]
    if unknown or not names:
        raise UsageError(f"unknown method(s) {', '.join(unknown) or '(none)'}; choose from {', '.join(METHODS)}")
    return names


def _report(ids, pvalues, g: StepFunction | None, methods, alpha, decimals, out, top):
    outcomes = {m: apply(m, pvalues, alpha, g) for m in methods}
    rows = np.arange(len(ids))
    if top is not None:
        rows = np.argsort(pvalues, kind="stable")[:top]
        rows = rows[np.argsort(np.asarray(ids, dtype=object)[rows], kind="stable")]
    sub = {m: _subset(o, rows) for m, o in outcomes.items()}
    _emit(format_outcome_table([ids[i] for i in rows], pvalues[rows], sub, decimals), out)
    counts = " ".join(f"{m}={outcomes[m].k}" for m in methods)
    print(f"rejections at alpha={alpha:g}: {counts}", file=sys.stderr)
    for m in methods:
        for note in outcomes[m].notes:
            print(f"note ({m}): {note}", file=sys.stderr)
    return outcomes


def _subset(outcome, rows):
    # only the per-hypothesis columns are used by the table writer
    return replace(outcome, adjusted=outcome.adjusted[rows], rejected=outcome.rejected[rows])


# --- commands -------------------------------------------------------------------


def cmd_analyze(args) -> int:
    records = read_counts(resolve(args.input))
    pvalues, dists = pooled_tests(records, args.sided)
    ids = [r.id for r in records]
    g = aggregate(dists)
    if args.dists_out:
        write_dists(args.dists_out, [DistRecord(i, d) for i, d in zip(ids, dists)])
    methods = _methods(args.methods, METHODS)
    _report(ids, pvalues, g, methods, args.alpha, None if args.full_precision else 4, args.out, args.top)
    return 0


def cmd_adjust(args) -> int:
    ids, pvalues = read_pvalues(resolve(args.input))
    g = None
    if args.dists:
        records = {r.id: r for r in read_dists(resolve(args.dists))}
        missing = [i for i in ids if i not in records]
        if missing:
            raise DomainError(f"no distribution for id(s) {', '.join(missing[:5])}")
        g = aggregate([records[i].dist for i in ids])
    methods = _methods(args.methods, METHODS if g is not None else CONTINUOUS_METHODS)
    if g is None and any(m in DISCRETE_METHODS for m in methods):
        raise UsageError("discrete methods need the null distributions (--dists)")
    _report(ids, pvalues, g, methods, args.alpha, None if args.full_precision else 4, args.out, None)
    return 0


def cmd_simulate(args) -> int:
    grid, methods = sim.load_grid(resolve(args.grid))
    overrides = {k: v for k, v in (("trials", args.trials), ("seed", args.seed), ("alpha", args.alpha)) if v is not None}
    if overrides:
        grid = [replace(cfg, **overrides) for cfg in grid]
    if args.methods:
        methods = _methods(args.methods, METHODS)
    results = sim.run_suite(grid, methods, parallelism=args.parallel)
    _emit(sim.format_table(results, include_se=args.se), args.out)
    return 0


def cmd_oracle(args) -> int:
    records = read_dists(resolve(args.dists))
    dists = [PointMassDist.from_record(r) for r in records]
    rates = exact_error_rates(dists, args.method, args.alpha, cap=args.cap, trace=args.trace)
    lines = ["method,alpha,fdr,fwer,outcomes", f"{args.method},{args.alpha:g},{rates.fdr:.10g},{rates.fwer:.10g},{rates.outcomes}"]
    text = "\n".join(lines) + "\n"
    if args.trace:
        text += "\n" + format_trace(rates.trace)
    _emit(text, args.out)
    return 0


def cmd_gfun(args) -> int:
    if args.counts:
        _, dists = pooled_tests(read_counts(resolve(args.counts)), args.sided)
    else:
        dists = [r.dist for r in read_dists(resolve(args.dists))]
    g = aggregate(dists)
    _emit(format_grid(ratio_grid(g, args.lo, args.hi, args.points)), args.out)
    return 0


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="discrete-fdr", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, alpha=True, out=True):
        if alpha:
            p.add_argument("--alpha", type=float, default=0.05, help="FDR level (default 0.05)")
        if out:
            p.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("analyze", help="count data -> adjusted p-values")
    p.add_argument("input", help="CSV with id,event_count,total_count (or 'synthetic')")
    p.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--sided", choices=("one", "two"), default="one")
    p.add_argument("--full-precision", action="store_true", help="print adjusted p-values at full precision")
    p.add_argument("--dists-out", help="also write the null distributions to this file")
    p.add_argument("--top", type=int, help="only list the records with the TOP smallest p-values")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("adjust", help="adjust precomputed p-values")
    p.add_argument("input", help="CSV with id,pvalue columns")
    p.add_argument("--dists", help="distribution file with one record per id")
    p.add_argument("--methods")
    p.add_argument("--full-precision", action="store_true")
    common(p)
    p.set_defaults(func=cmd_adjust)

    p = sub.add_parser("simulate", help="Monte Carlo power table")
    p.add_argument("grid", help="JSON grid file (or 'desk')")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--methods")
    p.add_argument("--parallel", type=int, default=1, help="worker processes")
    p.add_argument("--se", action="store_true", help="add standard error columns")
    common(p, alpha=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="exact FDR / FWER by enumeration")
    p.add_argument("dists", help="distribution file (or 'counterexample-n4', 'counterexample-n10')")
    p.add_argument("--method", choices=METHODS, default="DBH")
    p.add_argument("--trace", action="store_true", help="also list every outcome")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="maximum number of joint outcomes")
    common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gfun", help="G and n*x on a grid")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--counts", help="count CSV, analysed as in 'analyze'")
    src.add_argument("--dists", help="distribution file")
    p.add_argument("--sided", choices=("one", "two"), default="one")
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=0.001)
    p.add_argument("--points", type=int, default=201)
    common(p, alpha=False)
    p.set_defaults(func=cmd_gfun)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"discrete-fdr {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, OSError) as exc:
        print(f"discrete-fdr {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
