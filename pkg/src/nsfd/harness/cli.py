"""Command line entry point: ``nsfd run | list | diff``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from nsfd.caputo import SolutionDivergedError
from nsfd.fraccore import UnknownDFError, registry_tags
from nsfd.harness import (
    EXIT_DIVERGED,
    EXIT_ERROR,
    EXIT_SUCCESS,
    EXPERIMENTS,
    OUTPUT_DIR_ENV,
    ConfigError,
    ExperimentConfig,
    SchemaMismatchError,
    diff_against_reference,
    run,
)
from nsfd.locus import RootFinderError


def _parse_set(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value: got {item!r}")
        out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsfd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a named experiment")
    p_run.add_argument("experiment", nargs="?", help="experiment id (see 'nsfd list')")
    p_run.add_argument("--config", type=Path, help="INI file with [experiment] and [params]")
    p_run.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override a parameter (repeatable)",
    )
    p_run.add_argument(
        "--out", type=Path, help=f"output directory (default: ${OUTPUT_DIR_ENV} or ./nsfd-output)"
    )
    p_run.add_argument("--plots", action="store_true", help="also write plot data files")

    sub.add_parser("list", help="list available experiments")

    p_diff = sub.add_parser("diff", help="compare a produced CSV against a reference CSV")
    p_diff.add_argument("produced", type=Path)
    p_diff.add_argument("reference", type=Path)
    p_diff.add_argument("--rtol", type=float, default=0.01, help="relative tolerance")
    p_diff.add_argument(
        "--rate-atol", type=float, default=None,
        help="absolute tolerance for rate columns (default: use --rtol)",
    )
    return parser


def _cmd_run(args) -> int:
    if args.config is not None:
        config = ExperimentConfig.from_file(args.config)
        if args.experiment and args.experiment != config.experiment:
            raise ConfigError(
                f"experiment {args.experiment!r} conflicts with config id {config.experiment!r}"
            )
    elif args.experiment:
        config = ExperimentConfig(args.experiment)
    else:
        raise ConfigError("give an experiment id or --config")
    config.overrides.update(_parse_set(args.set))
    if args.out is not None:
        config.output_dir = args.out
    config.emit_plots = config.emit_plots or args.plots

    manifest = run(config)
    for name in manifest.outputs:
        print(name)
    print(f"{manifest.experiment}: {manifest.status} in {manifest.duration_s:.1f} s")
    return manifest.exit_code


def _cmd_list() -> int:
    width = max(map(len, EXPERIMENTS))
    for eid, exp in EXPERIMENTS.items():
        print(f"{eid:<{width}}  {exp.description}")
    print("\ndenominator functions:")
    for tag in registry_tags():
        print(f"  {tag}")
    return EXIT_SUCCESS


def _cmd_diff(args) -> int:
    report = diff_against_reference(args.produced, args.reference, args.rtol, args.rate_atol)
    print(report.summary())
    return EXIT_SUCCESS if report.passed else EXIT_ERROR


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "list":
            return _cmd_list()
        return _cmd_diff(args)
    except SolutionDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (
        ConfigError, UnknownDFError, SchemaMismatchError, RootFinderError, OSError, ValueError
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
