"""Command line entry point: ``polariton run|preset|list-presets|validate``."""
from __future__ import annotations

import argparse
import logging
import sys

from .constants import ps_to_inv_ev
from .model import SpecError
from .sweep import (
    EXIT_IO,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_VALIDATION,
    ConfigError,
    default_workers,
    emit,
    figure_presets,
    load_config,
    run_sweep,
)

log = logging.getLogger("polariton")


def _common(p):
    p.add_argument("--workers", type=int, default=None, help="parallel worker processes (default: cores)")
    p.add_argument("--mo", type=int, default=None, help="phonon truncation m_o")
    p.add_argument("--horizon-ps", type=float, default=None, help="propagation horizon in ps")
    p.add_argument("--cross-terms", action="store_true", help="joint exciton+phonon driving generators")
    p.add_argument("--oracle", action="store_true", help="add RK4 comparison columns")
    p.add_argument("--out", default=None, help="output path (default: stdout for csv)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser():
    parser = argparse.ArgumentParser(prog="polariton")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a sweep described by a config file")
    p.add_argument("config")
    _common(p)
    p = sub.add_parser("preset", help="run a named figure preset")
    p.add_argument("name")
    _common(p)
    sub.add_parser("list-presets", help="list figure presets")
    p = sub.add_parser("validate", help="check a config file without running it")
    p.add_argument("config")
    return parser


def _apply_flags(plan, args):
    changes = {}
    if args.mo is not None:
        changes["m_o"] = args.mo
    if args.horizon_ps is not None:
        changes["t_final"] = ps_to_inv_ev(args.horizon_ps)
    if args.cross_terms:
        changes["cross_terms"] = True
    if not changes:
        return plan
    try:
        return plan.replace_base(**changes)
    except SpecError as exc:
        raise ConfigError(str(exc), EXIT_VALIDATION, exc.key) from exc


def _run(plan, args):
    plan = _apply_flags(plan, args)
    workers = args.workers or default_workers()
    try:
        table = run_sweep(plan, workers=workers, oracle=args.oracle)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out is None:
        if args.format != "csv":
            raise ConfigError("--out is required for json output", EXIT_VALIDATION, "out")
        import csv
        from .sweep import _fmt, csv_columns
        cols = csv_columns(table)
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(cols)
        for row in table:
            w.writerow([_fmt(row.get(c)) for c in cols])
    else:
        emit(table, args.format, args.out, plan)
    failed = sum(1 for r in table if r["error"])
    if failed:
        print(f"warning: {failed} of {len(table)} points failed", file=sys.stderr)
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "list-presets":
            for name, plan in figure_presets().items():
                labels = ", ".join(s.label for s in plan.series if s.label)
                print(f"{name}\taxis={plan.axis}\tpoints={len(plan.values)}\t{labels}")
            return EXIT_OK
        if args.command == "validate":
            plan = load_config(args.config)
            print(f"ok: {len(plan.points())} points")
            return EXIT_OK
        if args.command == "preset":
            presets = figure_presets()
            if args.name not in presets:
                raise ConfigError(f"unknown preset {args.name!r}", EXIT_VALIDATION, "preset")
            return _run(presets[args.name], args)
        return _run(load_config(args.config), args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
