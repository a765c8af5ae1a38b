from .config import ExperimentConfig, from_dict, load_config
from .registry import (
    DEFAULT_THRESHOLDS,
    DESCRIPTIONS,
    REGISTRY,
    CheckResult,
    ExperimentResult,
    ResultRow,
    build_coefficients,
    pipeline_limit,
    run_experiment_config,
)
from .runner import CSV_HEADER, RunOutput, compute_assumptions, run_experiment

__all__ = [
    "ExperimentConfig",
    "from_dict",
    "load_config",
    "DEFAULT_THRESHOLDS",
    "DESCRIPTIONS",
    "REGISTRY",
    "CheckResult",
    "ExperimentResult",
    "ResultRow",
    "build_coefficients",
    "pipeline_limit",
    "run_experiment_config",
    "CSV_HEADER",
    "RunOutput",
    "compute_assumptions",
    "run_experiment",
]
