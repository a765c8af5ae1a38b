"""Run a configured experiment and write the canonical output files.

Outputs per run (into the config's output directory):

* ``results.csv``      one row per sweep point, fixed schema (see CSV_HEADER),
* ``summary.json``     derived quantities plus pass/fail checks,
* ``assumptions.json`` coefficient self-checks for the configured fields,
* ``error.json``       only on abort, naming the failing point.

Rows are written by a single writer after all reductions; numbers are
formatted with ``repr`` so reruns are byte-identical except the walltime
column.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..coefficients import check_assumptions
from ..errors import ConfigurationError, SdeLabError
from ..paths import PathEnsemble
from .config import ExperimentConfig
from .registry import REGISTRY, ExperimentResult, build_coefficients

CSV_HEADER = "experiment,drift,noise_a,noise_b,R,eps,dt,t,estimate,stderr,M,seed,walltime_s"

# experiments whose config carries a full coefficient set worth checking
COEFFICIENT_EXPERIMENTS = frozenset(
    {
        "exact_characteristic",
        "truncation_convergence",
        "cauchy_in_R",
        "moment_uniformity",
        "krylov_check",
    }
)


@dataclass
class RunOutput:
    result: ExperimentResult
    out_dir: Path
    results_csv: Path
    summary_json: Path
    assumptions_json: Path
    walltime_s: float

    @property
    def all_passed(self) -> bool:
        return self.result.all_passed


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_jsonify(payload), indent=2, sort_keys=True) + "\n")


def write_results_csv(
    path: Path, cfg: ExperimentConfig, result: ExperimentResult, walltime: float
) -> None:
    uses_coeffs = cfg.experiment in COEFFICIENT_EXPERIMENTS
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER.split(","))
        for row in result.rows:
            writer.writerow(
                [
                    cfg.experiment,
                    cfg.drift if uses_coeffs else "",
                    _fmt(cfg.noise_a if uses_coeffs else None),
                    _fmt(cfg.noise_b if uses_coeffs else None),
                    _fmt(row.R),
                    _fmt(row.eps),
                    _fmt(row.dt),
                    _fmt(row.t),
                    _fmt(row.estimate),
                    _fmt(row.stderr),
                    _fmt(row.m),
                    cfg.seed,
                    _fmt(row.walltime_s if row.walltime_s is not None else walltime),
                ]
            )


def compute_assumptions(cfg: ExperimentConfig) -> dict:
    if cfg.experiment not in COEFFICIENT_EXPERIMENTS:
        return {
            "passed": True,
            "items": [],
            "note": f"{cfg.experiment} configures no coefficient fields",
        }
    probe = PathEnsemble(cfg.grid, min(cfg.size, 8), cfg.seed)
    # sweeps apply their own truncation per level; check the base fields
    report = check_assumptions(
        lambda path: build_coefficients(cfg, path),
        probe,
        probe_xs=np.linspace(-2.0, 2.0, 41),
    )
    return report.to_dict()


def run_experiment(
    cfg: ExperimentConfig,
    threads: int = 1,
    out_dir: Optional[str] = None,
) -> RunOutput:
    """Compute all sweep points of one experiment and write its files.

    Raises the underlying error after writing ``error.json`` so the CLI can
    map it to an exit code; the JSON carries the failing coordinates when
    the error provides them (solver errors carry (t, x, path id)).
    """
    target = Path(out_dir if out_dir is not None else cfg.out_dir)
    target.mkdir(parents=True, exist_ok=True)
    if cfg.experiment not in REGISTRY:
        raise ConfigurationError(f"unknown experiment {cfg.experiment!r}")

    started = time.perf_counter()
    try:
        result = REGISTRY[cfg.experiment](cfg, threads)
        assumptions = compute_assumptions(cfg)
    except SdeLabError as exc:
        point = {
            key: getattr(exc, key)
            for key in ("t", "x", "path_id", "crossing_time")
            if hasattr(exc, key)
        }
        _write_json(
            target / "error.json",
            {
                "experiment": cfg.experiment,
                "error": type(exc).__name__,
                "message": str(exc),
                "sweep_point": point or None,
            },
        )
        raise
    walltime = time.perf_counter() - started

    results_csv = target / "results.csv"
    summary_json = target / "summary.json"
    assumptions_json = target / "assumptions.json"
    write_results_csv(results_csv, cfg, result, walltime)
    _write_json(
        summary_json,
        {
            "schema_version": 1,
            "experiment": cfg.experiment,
            "seed": cfg.seed,
            "all_passed": result.all_passed,
            "walltime_s": walltime,
            "checks": [c.to_dict() for c in result.checks],
            "summary": result.summary,
            "config": cfg.raw,
        },
    )
    _write_json(assumptions_json, assumptions)
    return RunOutput(
        result=result,
        out_dir=target,
        results_csv=results_csv,
        summary_json=summary_json,
        assumptions_json=assumptions_json,
        walltime_s=walltime,
    )
