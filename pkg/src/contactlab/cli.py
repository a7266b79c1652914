"""Command line entry point: ``contactlab <suite> [--config PATH] [--out DIR] ...``."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .suites import SUITES, ConfigError, ExperimentConfig, load_config, resolve_out_dir, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="contactlab", description="Run a seeded experiment suite.")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--out", help="output directory (default: $CONTACTLAB_OUT, then the config value)")
    p.add_argument("--seed", type=int)
    p.add_argument("--grid", type=int, help="grid size N for every part of the suite")
    p.add_argument("--jobs", type=int, help="threads for independent samples inside a suite")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        config = load_config(args.config) if args.config else ExperimentConfig()
        overrides = {k: v for k, v in (("seed", args.seed), ("grid", args.grid), ("jobs", args.jobs))
                     if v is not None}
        config = dataclasses.replace(config, **overrides)
        out = resolve_out_dir(args.out, config)
        config = dataclasses.replace(config, out=out).validate()
    except ConfigError as exc:
        print(f"contactlab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = run_suite(args.suite, config, out)
    for check in report.checks:
        print(check.line())
    status = "passed" if report.passed else "FAILED"
    print(f"{report.suite}: {status} in {report.wall_time:.1f} s; reports in {out}")
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
