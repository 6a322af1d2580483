"""Command line interface.

Subcommands:
    run <preset|config.ini>   execute a preset or config into an output dir
    analytic                  tabulate the scattering oracle pair and extras
    decode <rate.csv>         decode temporal information from a rate CSV
    validate                  run the invariant suite
    presets --list            list available presets

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 numerical
invariant abort.  DIRACPAIR_WORKERS overrides the worker count.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import bound_state_levels, klein_rate, response_time
from .config import parse_config
from .constants import ATOMIC
from .errors import ConfigError, DiracpairError, InvariantViolation
from .presets import PRESETS, get_preset, preset_names
from .runner import (
    decode_rate_csv,
    run_config,
    run_preset,
    transmission_table,
    validate,
    write_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diracpair",
        description="Pair creation from the Dirac vacuum in 1D supercritical fields",
    )
    parser.add_argument("--version", action="version", version=f"diracpair {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a preset or a config file")
    p_run.add_argument("target", help="preset name or path to a config file")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--workers", type=int, default=None)
    p_run.add_argument(
        "--extended", action="store_true",
        help="allow extended-runtime (production-scale) presets",
    )

    p_an = sub.add_parser("analytic", help="scattering oracle tables")
    p_an.add_argument("--v1", type=float, default=2.5 * ATOMIC.c2, help="step height (a.u.)")
    p_an.add_argument("--v2", type=float, default=0.25 * ATOMIC.c2, help="control height (a.u.)")
    p_an.add_argument("--d", type=float, default=0.2, help="separation (a.u.)")
    p_an.add_argument("--samples", type=int, default=200)
    p_an.add_argument("--e-star", type=float, default=1.25 * ATOMIC.c2)
    p_an.add_argument("--out", default=None, help="write CSV here instead of stdout summary")

    p_dec = sub.add_parser("decode", help="decode a rate CSV")
    p_dec.add_argument("csv", help="rate CSV produced by run")

    p_val = sub.add_parser("validate", help="run the invariant suite")
    p_val.add_argument(
        "--desk", action="store_true", help="include the full desk-scale evolution check"
    )

    p_pre = sub.add_parser("presets", help="preset catalog")
    p_pre.add_argument("--list", action="store_true")
    return parser


def _cmd_run(args) -> int:
    target = args.target
    if target in PRESETS:
        result = run_preset(
            target, Path(args.out), workers=args.workers, extended=args.extended
        )
        print(f"preset {result.name}: artifacts in {result.out_dir}")
        return EXIT_OK
    path = Path(target)
    if not path.exists():
        print(
            f"error: {target!r} is neither a preset nor a config file "
            f"(presets: {', '.join(preset_names())})",
            file=sys.stderr,
        )
        return EXIT_USAGE
    cfg = parse_config(path.read_text())
    result = run_config(cfg, Path(args.out), workers=args.workers)
    print(f"run {cfg.label}: artifacts in {args.out}")
    return EXIT_OK


def _cmd_analytic(args) -> int:
    table = transmission_table(args.v1, args.v2, args.d, args.samples)
    worst = float(np.max(table["abs_diff"]))
    summary = {
        "v1": args.v1,
        "v2": args.v2,
        "d": args.d,
        "samples": args.samples,
        "max_oracle_diff": worst,
        "klein_rate": klein_rate(args.v1, args.v2, args.d),
        "response_time": response_time(args.d, args.e_star),
    }
    if args.v2 < 0.0:
        levels = bound_state_levels(-args.v2, args.d)
        summary["bound_levels"] = [float(e) for e in levels.levels]
    if args.out:
        write_csv(Path(args.out), "transmission-table", None, table)
        summary["csv"] = args.out
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _cmd_decode(args) -> int:
    report = decode_rate_csv(Path(args.csv))
    print(json.dumps(report, indent=2))
    return EXIT_OK


def _cmd_validate(args) -> int:
    results = validate(desk=args.desk)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name}: {r.detail}")
    if failed:
        print(f"{len(failed)} of {len(results)} checks failed", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def _cmd_presets(args) -> int:
    for name in preset_names():
        preset = get_preset(name)
        gate = " [extended]" if preset.extended else ""
        print(f"{name:10s} {preset.description}{gate} ({len(preset.runs)} runs)")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handlers = {
        "run": _cmd_run,
        "analytic": _cmd_analytic,
        "decode": _cmd_decode,
        "validate": _cmd_validate,
        "presets": _cmd_presets,
    }
    try:
        return handlers[args.command](args)
    except InvariantViolation as exc:
        print(f"numerical invariant violated: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DiracpairError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
