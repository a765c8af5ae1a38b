"""Command line interface.

    sdelab run --config FILE [--seed N] [--out DIR] [--threads K]
    sdelab list
    sdelab check --config FILE [--out DIR]

Exit codes: 0 all configured assertions pass, 1 assertion failure,
2 configuration error, 3 runtime/numerical error.  ``SDELAB_THREADS`` is
the fallback for ``--threads``.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

from .errors import ConfigurationError, SdeLabError
from .experiments import (
    DESCRIPTIONS,
    compute_assumptions,
    load_config,
    run_experiment,
)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdelab",
        description="Monte Carlo laboratory for 1-d SDEs with rough random drift",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one configured experiment")
    run_p.add_argument("--config", required=True, help="TOML experiment config")
    run_p.add_argument("--seed", type=int, default=None, help="override config seed")
    run_p.add_argument("--out", default=None, help="override output directory")
    run_p.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker processes (default: SDELAB_THREADS or 1)",
    )

    sub.add_parser("list", help="enumerate experiments")

    check_p = sub.add_parser("check", help="run coefficient assumption checks only")
    check_p.add_argument("--config", required=True, help="TOML experiment config")
    check_p.add_argument("--out", default=None, help="override output directory")
    return parser


def _resolve_threads(value: Optional[int]) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("SDELAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigurationError(
                f"SDELAB_THREADS must be an integer, got {env!r}"
            ) from exc
    return 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for name, desc in DESCRIPTIONS.items():
                print(f"{name:24s} {desc}")
            return EXIT_OK

        if args.command == "check":
            cfg = load_config(args.config)
            report = compute_assumptions(cfg)
            if args.out is not None:
                from pathlib import Path

                from .experiments.runner import _write_json

                out = Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                _write_json(out / "assumptions.json", report)
            for item in report.get("items", []):
                status = "pass" if item["passed"] else "FAIL"
                print(f"[{status}] {item['name']} worst={item['worst']}")
            if report.get("note"):
                print(report["note"])
            return EXIT_OK if report["passed"] else EXIT_ASSERTION

        if args.command == "run":
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg.seed = args.seed
                cfg.raw = {**cfg.raw, "seed": args.seed}
            threads = _resolve_threads(args.threads)
            output = run_experiment(cfg, threads=threads, out_dir=args.out)
            for check in output.result.checks:
                status = "pass" if check.passed else "FAIL"
                print(
                    f"[{status}] {check.name}: value={check.value:.6g} "
                    f"({check.threshold})"
                )
            print(
                f"{cfg.experiment}: {len(output.result.rows)} rows -> "
                f"{output.results_csv} ({output.walltime_s:.2f} s)"
            )
            return EXIT_OK if output.all_passed else EXIT_ASSERTION
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SdeLabError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
