"""Command-line entry point: ``irs-wsr run --config FILE [overrides]``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .exceptions import ConfigError
from .experiment import (
    DEFAULT_VALUES,
    SummaryRow,
    aggregate,
    emit_csv,
    load_config,
    run_experiment,
    summary_path,
    validate,
)

log = logging.getLogger("irs_wsr")

EXIT_CONFIG = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irs-wsr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser(
        "run",
        help="run a Monte Carlo sweep and write per-trial and summary CSV files",
        description="Flags override the matching keys of the config file.",
    )
    run.add_argument("--config", required=True, help="YAML experiment file")
    run.add_argument("--sweep", choices=["N", "M", "Q"], help="axis to sweep")
    run.add_argument("--values", type=int, nargs="+", help="axis values")
    run.add_argument("--trials", type=int, help="Monte Carlo trials per axis value")
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--methods", help="comma-separated subset of dmao,random,mrt,zf")
    run.add_argument("--out", help="per-trial CSV path; the summary goes next to it")
    run.add_argument("--workers", type=int, help="worker processes")
    run.add_argument("--timing", action="store_true", default=None, help="record wall time per solve")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def apply_overrides(cfg, args):
    changes = {}
    if args.sweep is not None:
        changes["sweep"] = args.sweep
        if args.values is None and args.sweep != cfg.sweep:
            changes["values"] = list(DEFAULT_VALUES[args.sweep])
    for name in ("values", "trials", "seed", "out", "workers", "timing"):
        if getattr(args, name) is not None:
            changes[name] = getattr(args, name)
    if args.methods is not None:
        changes["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    cfg = replace(cfg, **changes)
    validate(cfg)
    return cfg


def _print_summary(summary):
    print(f"{'method':<8} {'axis':>6} {'mean':>10} {'stderr':>9} {'n':>5}")
    for s in summary:
        mean = "-" if s.mean is None else f"{s.mean:10.4f}"
        err = "-" if s.stderr is None else f"{s.stderr:9.4f}"
        print(f"{s.method:<8} {s.axis_value:>6} {mean:>10} {err:>9} {s.trials:>5}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = apply_overrides(load_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    total = len(cfg.methods) * cfg.trials * len(cfg.values)
    rows = run_experiment(cfg, progress=lambda n: log.info("%d/%d rows", n, total))
    summary = aggregate(rows)
    try:
        emit_csv(rows, cfg.out)
        emit_csv(summary, summary_path(cfg.out), SummaryRow)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    _print_summary(summary)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
