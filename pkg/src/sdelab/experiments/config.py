"""Declarative experiment configuration, stored as TOML.

One config file describes one experiment run: coefficient choice, grid,
ensemble size, sweeps, solver settings, pass/fail thresholds and output
directory.  The dialect is TOML (key-value with nested tables) versioned
with a top-level ``schema_version`` key; see the shipped ``configs/``
directory for the canonical files.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import ConfigurationError
from ..paths import TimeGrid

SCHEMA_VERSION = 1

EXPERIMENT_IDS = (
    "exact_characteristic",
    "verhulst",
    "exp_moment",
    "truncation_convergence",
    "cauchy_in_R",
    "moment_uniformity",
    "gronwall",
    "krylov_check",
)

DRIFT_NAMES = ("hunter_saxton", "spike", "zero")


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    grid: TimeGrid
    size: int
    out_dir: str = "results"
    drift: str = "zero"
    drift_params: Dict[str, float] = field(default_factory=dict)
    noise_a: float = 0.0
    noise_b: float = 0.0
    initial: float = 0.0
    cap: float = 1e6
    sweep_r: List[float] = field(default_factory=list)
    sweep_eps: List[float] = field(default_factory=list)
    dt_halvings: int = 0
    options: Dict[str, Any] = field(default_factory=dict)
    thresholds: Dict[str, Any] = field(default_factory=dict)
    raw: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENT_IDS:
            raise ConfigurationError(
                f"unknown experiment {self.experiment!r}; known: {EXPERIMENT_IDS}"
            )
        if self.drift not in DRIFT_NAMES:
            raise ConfigurationError(
                f"unknown drift {self.drift!r}; known: {DRIFT_NAMES}"
            )
        if self.size < 1:
            raise ConfigurationError("ensemble size must be >= 1")
        if self.dt_halvings < 0:
            raise ConfigurationError("dt_halvings must be >= 0")
        for name, sweep in (("R", self.sweep_r), ("eps", self.sweep_eps)):
            if any(v <= 0 for v in sweep):
                raise ConfigurationError(f"sweep {name} values must be positive")

    def require_sweep_r(self, minimum: int = 1) -> List[float]:
        if len(self.sweep_r) < minimum:
            raise ConfigurationError(
                f"{self.experiment} needs a sweep.R list with >= {minimum} entries"
            )
        return self.sweep_r

    def require_sweep_eps(self, minimum: int = 1) -> List[float]:
        if len(self.sweep_eps) < minimum:
            raise ConfigurationError(
                f"{self.experiment} needs a sweep.eps list with >= {minimum} entries"
            )
        return self.sweep_eps

    def option(self, key: str, default=None):
        return self.options.get(key, default)


def _section(data: Dict[str, Any], name: str) -> Dict[str, Any]:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigurationError(f"[{name}] must be a table")
    return value


def from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigurationError(
            f"unsupported schema_version {version!r}; this build reads "
            f"{SCHEMA_VERSION}"
        )
    try:
        experiment = data["experiment"]
        seed = int(data["seed"])
    except KeyError as exc:
        raise ConfigurationError(f"config is missing required key {exc}") from exc

    grid_tbl = _section(data, "grid")
    if "horizon" not in grid_tbl or "dt" not in grid_tbl:
        raise ConfigurationError("[grid] needs horizon and dt")
    grid = TimeGrid(float(grid_tbl["horizon"]), float(grid_tbl["dt"]))

    ensemble = _section(data, "ensemble")
    size = int(ensemble.get("size", 1))

    coeff = _section(data, "coefficients")
    solve = _section(data, "solve")
    sweep = _section(data, "sweep")

    return ExperimentConfig(
        experiment=experiment,
        seed=seed,
        grid=grid,
        size=size,
        out_dir=str(data.get("out_dir", "results")),
        drift=str(coeff.get("drift", "zero")),
        drift_params={k: float(v) for k, v in _section(coeff, "drift_params").items()},
        noise_a=float(coeff.get("noise_a", 0.0)),
        noise_b=float(coeff.get("noise_b", 0.0)),
        initial=float(solve.get("initial", 0.0)),
        cap=float(solve.get("cap", 1e6)),
        sweep_r=[float(v) for v in sweep.get("R", [])],
        sweep_eps=[float(v) for v in sweep.get("eps", [])],
        dt_halvings=int(sweep.get("dt_halvings", 0)),
        options=dict(_section(data, "options")),
        thresholds=dict(_section(data, "thresholds")),
        raw=data,
    )


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file not found: {p}")
    try:
        with p.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"config {p} is not valid TOML: {exc}") from exc
    return from_dict(data)
