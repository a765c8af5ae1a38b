"""The canonical experiments: truncate -> solve -> extract-limit pipeline.

Each experiment maps an :class:`ExperimentConfig` to rows of the shared CSV
schema, a summary dict and a list of pass/fail checks whose thresholds come
from the config (defaults documented in ``DEFAULT_THRESHOLDS``).

Heavy experiments parallelize over replicates with worker processes; every
worker regenerates its paths from (seed, replicate), so results do not
depend on the worker count, and reductions run in replicate order with
compensated summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ..coefficients import (
    CoefficientSet,
    HunterSaxtonParams,
    SpikeDriftParams,
    attach_noise,
    hs_drift,
    linear_noise,
    oleinik_profile,
    spike_drift,
    truncate_drift,
    zero_drift,
)
from ..errors import ConfigurationError
from ..estimators import EstimateWithCI, loglog_slope
from ..gronwall import (
    GronwallParams,
    cpr,
    deterministic_instance,
    gronwall_verify,
    simulate_instance,
)
from ..paths import BrownianPath, PathEnsemble, TimeGrid, refine, sample_path
from ..solver import SolveConfig, euler_solve, krylov_check
from .config import ExperimentConfig

__all__ = [
    "CheckResult",
    "ResultRow",
    "ExperimentResult",
    "REGISTRY",
    "DESCRIPTIONS",
    "DEFAULT_THRESHOLDS",
    "build_coefficients",
    "pipeline_limit",
    "run_experiment_config",
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: str

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": self.value,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class ResultRow:
    """One sweep point in the canonical CSV schema (None -> empty field)."""

    estimate: float
    stderr: Optional[float] = None
    R: Optional[float] = None
    eps: Optional[float] = None
    dt: Optional[float] = None
    t: Optional[float] = None
    m: Optional[int] = None
    walltime_s: Optional[float] = None


@dataclass
class ExperimentResult:
    experiment: str
    rows: List[ResultRow]
    summary: dict
    checks: List[CheckResult]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _mean_stderr(values: Sequence[float]) -> EstimateWithCI:
    m = len(values)
    mean = math.fsum(values) / m
    if m > 1:
        var = math.fsum((v - mean) ** 2 for v in values) / (m - 1)
        se = math.sqrt(var / m)
    else:
        se = 0.0
    return EstimateWithCI(mean, se, m)


def _parallel_map(fn: Callable, count: int, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in range(count)]
    from concurrent.futures import ProcessPoolExecutor

    chunk = max(1, count // (threads * 4))
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, range(count), chunksize=chunk))


# ---------------------------------------------------------------------------
# coefficient construction shared by experiments and assumption checks


def build_coefficients(cfg: ExperimentConfig, path: BrownianPath) -> CoefficientSet:
    if cfg.drift == "zero":
        base = zero_drift()
    elif cfg.drift == "spike":
        base = spike_drift(
            SpikeDriftParams(exponent=cfg.drift_params.get("exponent", 1.0 / 3.0))
        )
    elif cfg.drift == "hunter_saxton":
        params = HunterSaxtonParams(
            noise_slope=cfg.drift_params.get("noise_slope", 0.0),
            breaking_threshold=cfg.drift_params.get("breaking_threshold", 0.5),
            path=path,
        )
        base = hs_drift(params, path)
    else:  # pragma: no cover - guarded by config validation
        raise ConfigurationError(f"unknown drift {cfg.drift!r}")
    trunc = cfg.option("truncate_R")
    if trunc is not None:
        base = truncate_drift(base, float(trunc))
    return attach_noise(base, linear_noise(cfg.noise_a, cfg.noise_b))


# ---------------------------------------------------------------------------
# exact_characteristic


@dataclass(frozen=True)
class _CharacteristicJob:
    seed: int
    horizon: float
    dt: float
    noise_slope: float
    breaking_threshold: float
    noise_a: float
    noise_b: float
    x0s: Tuple[float, ...]
    cap: float
    levels: int
    horizon_factor: float


def _characteristic_errors(job: _CharacteristicJob, i: int) -> List[List[float]]:
    """Per replicate: sup error against the exact characteristic, per
    refinement level and per initial point, over the pre-blow-up window."""
    path = sample_path(TimeGrid(job.horizon, job.dt), job.seed, i)
    noise = linear_noise(job.noise_a, job.noise_b)
    out = []
    for level in range(job.levels):
        if level > 0:
            path = refine(path)
        params = HunterSaxtonParams(job.noise_slope, job.breaking_threshold, path)
        coeffs = attach_noise(hs_drift(params, path), noise)
        k_w = params.horizon_index(job.horizon_factor)
        edge = params.ramp_edge[: k_w + 1]
        errs = []
        for x0 in job.x0s:
            solved = euler_solve(coeffs, path, SolveConfig(x0, job.cap))
            gap = np.abs(solved.values[: k_w + 1] - x0 * edge)
            errs.append(float(gap.max()))
        out.append(errs)
    return out


def _collapse_oracle(x0: float, times: np.ndarray, threshold: float) -> np.ndarray:
    # closed-form characteristic for the noise-free ramp: x*(1 - t/(2 v))^2
    return x0 * np.maximum(1.0 - times / (2.0 * threshold), 0.0) ** 2


def run_exact_characteristic(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    if cfg.drift != "hunter_saxton":
        raise ConfigurationError("exact_characteristic requires the ramp drift")
    x0s = tuple(float(v) for v in cfg.option("initial_points", [cfg.initial]))
    if not x0s:
        raise ConfigurationError("exact_characteristic needs initial points")
    emit = cfg.option("emit", "errors")
    thr = {**DEFAULT_THRESHOLDS["exact_characteristic"][emit], **cfg.thresholds}
    job = _CharacteristicJob(
        seed=cfg.seed,
        horizon=cfg.grid.horizon,
        dt=cfg.grid.dt,
        noise_slope=cfg.drift_params.get("noise_slope", 0.0),
        breaking_threshold=cfg.drift_params.get("breaking_threshold", 0.5),
        noise_a=cfg.noise_a,
        noise_b=cfg.noise_b,
        x0s=x0s,
        cap=cfg.cap,
        levels=cfg.dt_halvings + 1,
        horizon_factor=float(cfg.option("horizon_factor", 0.9)),
    )

    rows: List[ResultRow] = []
    checks: List[CheckResult] = []
    summary: dict = {"initial_points": list(x0s)}

    if emit == "errors":
        per_rep = _parallel_map(partial(_characteristic_errors, job), cfg.size, threads)
        dts = [cfg.grid.dt / 2**level for level in range(job.levels)]
        summary["dts"] = dts
        per_x0: dict = {}
        for xi, x0 in enumerate(x0s):
            errs = []
            for level in range(job.levels):
                est = _mean_stderr([rep[level][xi] for rep in per_rep])
                errs.append(est)
                rows.append(
                    ResultRow(
                        estimate=est.value,
                        stderr=est.stderr,
                        dt=dts[level],
                        m=est.replicates,
                    )
                )
            ratios = [
                errs[lv].value / errs[lv + 1].value if errs[lv + 1].value > 0 else math.inf
                for lv in range(job.levels - 1)
            ]
            per_x0[f"{x0:g}"] = {
                "errors": [e.value for e in errs],
                "stderrs": [e.stderr for e in errs],
                "ratios": ratios,
            }
            if "max_error" in thr:
                checks.append(
                    CheckResult(
                        name=f"strong_error_x0={x0:g}",
                        passed=errs[0].value <= thr["max_error"],
                        value=errs[0].value,
                        threshold=f"<= {thr['max_error']}",
                    )
                )
            if "ratio_lo" in thr:
                for lv, ratio in enumerate(ratios):
                    checks.append(
                        CheckResult(
                            name=f"halving_gain_x0={x0:g}_level{lv}",
                            passed=thr["ratio_lo"] <= ratio <= thr["ratio_hi"],
                            value=ratio,
                            threshold=f"in [{thr['ratio_lo']}, {thr['ratio_hi']}]",
                        )
                    )
        summary["per_x0"] = per_x0
    elif emit == "trajectories":
        times = cfg.grid.times()
        stride = int(cfg.option("trajectory_stride", 1))
        acc = {x0: np.zeros(cfg.grid.n + 1) for x0 in x0s}
        for i in range(cfg.size):
            path = sample_path(cfg.grid, cfg.seed, i)
            params = HunterSaxtonParams(
                job.noise_slope, job.breaking_threshold, path
            )
            coeffs = attach_noise(
                hs_drift(params, path), linear_noise(cfg.noise_a, cfg.noise_b)
            )
            for x0 in x0s:
                acc[x0] += euler_solve(coeffs, path, SolveConfig(x0, cfg.cap)).values
        collapse_errors = {}
        for x0 in x0s:
            mean_traj = acc[x0] / cfg.size
            for k in range(0, cfg.grid.n + 1, stride):
                rows.append(
                    ResultRow(
                        estimate=float(mean_traj[k]),
                        dt=cfg.grid.dt,
                        t=float(times[k]),
                        m=cfg.size,
                    )
                )
            if job.noise_slope == 0.0 and cfg.noise_b == 0.0 and cfg.noise_a == 0.0:
                oracle = _collapse_oracle(x0, times, job.breaking_threshold)
                max_err = float(np.max(np.abs(mean_traj - oracle)))
                terminal = abs(float(mean_traj[-1]))
                collapse_errors[f"{x0:g}"] = {
                    "max_error": max_err,
                    "terminal": terminal,
                }
                if "max_error_per_dt" in thr:
                    checks.append(
                        CheckResult(
                            name=f"collapse_error_x0={x0:g}",
                            passed=max_err <= thr["max_error_per_dt"] * cfg.grid.dt,
                            value=max_err,
                            threshold=f"<= {thr['max_error_per_dt']}*dt",
                        )
                    )
                if "terminal_per_dt" in thr:
                    checks.append(
                        CheckResult(
                            name=f"terminal_collapse_x0={x0:g}",
                            passed=terminal <= thr["terminal_per_dt"] * cfg.grid.dt,
                            value=terminal,
                            threshold=f"<= {thr['terminal_per_dt']}*dt",
                        )
                    )
        summary["collapse"] = collapse_errors
    else:
        raise ConfigurationError(f"unknown emit mode {emit!r}")
    return ExperimentResult("exact_characteristic", rows, summary, checks)


# ---------------------------------------------------------------------------
# verhulst


def run_verhulst(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    from ..solver import verhulst_blowup_time, verhulst_exact

    q0 = cfg.option("initial_gradient")
    if q0 is None:
        raise ConfigurationError("verhulst needs options.initial_gradient")
    q0 = float(q0)
    sprime = float(cfg.option("noise_slope", 0.0))
    thr = {**DEFAULT_THRESHOLDS["verhulst"], **cfg.thresholds}
    grid = cfg.grid
    probe_max = float(cfg.option("probe_max_t", min(0.99, grid.horizon - grid.dt)))
    stride = int(cfg.option("probe_stride", 1))
    k_max = grid.index_of(grid.dt * math.floor(probe_max / grid.dt))

    profiles = []
    crossings = []
    for i in range(cfg.size):
        path = sample_path(grid, cfg.seed, i)
        crossings.append(verhulst_blowup_time(q0, sprime, path))
        profiles.append(
            [verhulst_exact(q0, sprime, path, k * grid.dt) for k in range(0, k_max + 1, stride)]
        )
    values = np.array(profiles)
    ts = np.arange(0, k_max + 1, stride) * grid.dt

    rows = []
    for j, t in enumerate(ts):
        est = _mean_stderr(list(values[:, j]))
        rows.append(
            ResultRow(estimate=est.value, stderr=est.stderr, t=float(t), m=est.replicates)
        )

    checks = []
    summary: dict = {
        "initial_gradient": q0,
        "noise_slope": sprime,
        "blowup_times": crossings,
    }
    if sprime == 0.0:
        oracle = 1.0 / (1.0 / q0 + 0.5 * ts)
        max_err = float(np.max(np.abs(values.mean(axis=0) - oracle)))
        summary["max_oracle_error"] = max_err
        checks.append(
            CheckResult(
                name="matches_deterministic_solution",
                passed=max_err <= thr["oracle_tol"],
                value=max_err,
                threshold=f"<= {thr['oracle_tol']}",
            )
        )
        if q0 < 0.0:
            expected = -2.0 / q0
            cross = crossings[0]
            err = math.inf if cross is None else abs(cross - expected)
            summary["expected_blowup"] = expected
            checks.append(
                CheckResult(
                    name="blowup_time",
                    passed=err <= thr["blowup_tol_steps"] * grid.dt,
                    value=cross if cross is not None else math.nan,
                    threshold=f"within {thr['blowup_tol_steps']}*dt of {expected:g}",
                )
            )
        else:
            checks.append(
                CheckResult(
                    name="no_blowup_for_positive_data",
                    passed=all(c is None for c in crossings),
                    value=float(sum(c is not None for c in crossings)),
                    threshold="no denominator crossing",
                )
            )
    return ExperimentResult("verhulst", rows, summary, checks)


# ---------------------------------------------------------------------------
# exp_moment


@dataclass(frozen=True)
class _ExpMomentJob:
    seed: int
    horizon: float
    dt: float
    C: float
    L: float
    p: float
    upper_T: float
    eps_list: Tuple[float, ...]


def _exp_moment_values(job: _ExpMomentJob, i: int) -> List[float]:
    grid = TimeGrid(job.horizon, job.dt)
    path = sample_path(grid, job.seed, i)
    profile = oleinik_profile(path, job.C, job.L)
    # cumulative integral of K from the first positive node
    cum = cumulative_trapezoid(profile[1:], dx=grid.dt, initial=0.0)
    i_T = grid.index_of(job.upper_T) - 1
    out = []
    for eps in job.eps_list:
        i_eps = grid.index_of(eps) - 1
        out.append(math.exp(job.p * (cum[i_T] - cum[i_eps])))
    return out


def run_exp_moment(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    eps_list = tuple(cfg.require_sweep_eps(minimum=3))
    thr = {**DEFAULT_THRESHOLDS["exp_moment"], **cfg.thresholds}
    p = float(cfg.option("exponent_p", 0.25))
    upper_T = float(cfg.option("upper_T", cfg.grid.horizon))
    job = _ExpMomentJob(
        seed=cfg.seed,
        horizon=cfg.grid.horizon,
        dt=cfg.grid.dt,
        C=float(cfg.option("oleinik_C", 0.0)),
        L=float(cfg.option("oleinik_L", 1.0)),
        p=p,
        upper_T=upper_T,
        eps_list=eps_list,
    )
    per_rep = _parallel_map(partial(_exp_moment_values, job), cfg.size, threads)

    rows = []
    points = []
    heavy = []
    for j, eps in enumerate(eps_list):
        est = _mean_stderr([rep[j] for rep in per_rep])
        rows.append(
            ResultRow(estimate=est.value, stderr=est.stderr, eps=eps, m=est.replicates)
        )
        points.append((eps, est.value))
        if est.value > 0 and est.replicates > 1:
            cv = est.stderr * math.sqrt(est.replicates) / est.value
            if cv > 2.0:
                heavy.append(eps)
    fit = loglog_slope(points)

    control_job = _ExpMomentJob(
        seed=cfg.seed,
        horizon=cfg.grid.horizon,
        dt=cfg.grid.dt,
        C=job.C,
        L=0.0,
        p=p,
        upper_T=upper_T,
        eps_list=eps_list,
    )
    control_vals = _exp_moment_values(control_job, 0)
    control_fit = loglog_slope(list(zip(eps_list, control_vals)))

    checks = [
        CheckResult(
            name="scaling_slope",
            passed=thr["slope_lo"] <= fit.slope <= thr["slope_hi"],
            value=fit.slope,
            threshold=f"in [{thr['slope_lo']}, {thr['slope_hi']}]",
        ),
        CheckResult(
            name="deterministic_control_slope",
            passed=abs(control_fit.slope - (-2.0 * p)) <= thr["control_slope_tol"],
            value=control_fit.slope,
            threshold=f"within {thr['control_slope_tol']} of {-2.0 * p}",
        ),
    ]
    summary = {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "theory_slope": -2.0 * p,
        "control_slope": control_fit.slope,
        "control_values": control_vals,
        "heavy_tail_eps": heavy,
    }
    return ExperimentResult("exp_moment", rows, summary, checks)


# ---------------------------------------------------------------------------
# truncation_convergence


def run_truncation_convergence(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    if cfg.drift != "spike":
        raise ConfigurationError("truncation_convergence runs on the spike drift")
    r_levels = cfg.require_sweep_r(minimum=1)
    thr = {**DEFAULT_THRESHOLDS["truncation_convergence"], **cfg.thresholds}
    params = SpikeDriftParams(
        exponent=cfg.drift_params.get("exponent", 1.0 / 3.0)
    )
    base = spike_drift(params)
    n_probe = int(cfg.option("probe_points", 4001))
    xs = np.unique(
        np.concatenate(
            [
                [0.0, 1.25, 1.5],
                np.geomspace(1e-7, 1.0, n_probe),
                [params.truncation_cutoff(R) for R in r_levels],
            ]
        )
    )
    rows = []
    checks = []
    gaps = {}
    for R in r_levels:
        trunc = truncate_drift(base, R)
        gap = float(max(base.drift(0.0, x) - trunc.drift(0.0, x) for x in xs))
        gaps[f"{R:g}"] = gap
        rows.append(ResultRow(estimate=gap, R=R, m=1))
        closed = params.truncation_gap(R)
        rel = abs(gap / closed - 1.0)
        checks.append(
            CheckResult(
                name=f"closed_form_gap_R={R:g}",
                passed=rel <= thr["gap_rel_tol"],
                value=gap,
                threshold=f"within {thr['gap_rel_tol'] * 100:.0f}% of {closed:g}",
            )
        )
        l2_bound = params.gradient_l2_squared / R
        checks.append(
            CheckResult(
                name=f"l2_bound_R={R:g}",
                passed=gap <= l2_bound * (1.0 + 1e-12),
                value=gap,
                threshold=f"<= {l2_bound:g}",
            )
        )
    summary = {
        "exponent": params.exponent,
        "gaps": gaps,
        "gradient_l2_squared": params.gradient_l2_squared,
    }
    return ExperimentResult("truncation_convergence", rows, summary, checks)


# ---------------------------------------------------------------------------
# cauchy_in_R and moment_uniformity share one sweep worker


@dataclass(frozen=True)
class _SweepJob:
    seed: int
    horizon: float
    dt: float
    drift: str
    drift_params: Tuple[Tuple[str, float], ...]
    r_levels: Tuple[float, ...]
    noise_a: float
    noise_b: float
    initial: float
    cap: float


def _sweep_base_drift(job: _SweepJob, path: BrownianPath) -> CoefficientSet:
    params = dict(job.drift_params)
    if job.drift == "spike":
        return spike_drift(SpikeDriftParams(exponent=params.get("exponent", 1.0 / 3.0)))
    if job.drift == "hunter_saxton":
        hs = HunterSaxtonParams(
            noise_slope=params.get("noise_slope", 0.0),
            breaking_threshold=params.get("breaking_threshold", 0.5),
            path=path,
        )
        return hs_drift(hs, path)
    return zero_drift()


def _solve_r_sweep(job: _SweepJob, i: int) -> List[np.ndarray]:
    grid = TimeGrid(job.horizon, job.dt)
    path = sample_path(grid, job.seed, i)
    base = _sweep_base_drift(job, path)
    noise = linear_noise(job.noise_a, job.noise_b)
    cfg = SolveConfig(job.initial, job.cap)
    out = []
    for R in job.r_levels:
        coeffs = attach_noise(truncate_drift(base, R), noise)
        out.append(euler_solve(coeffs, path, cfg).values)
    return out


def _pair_sups(job: _SweepJob, i: int) -> List[float]:
    values = _solve_r_sweep(job, i)
    return [
        float(np.max(np.abs(a - b))) for a, b in zip(values[:-1], values[1:])
    ]


def _sweep_sups(job: _SweepJob, i: int) -> List[float]:
    values = _solve_r_sweep(job, i)
    return [float(np.max(np.abs(v))) for v in values]


def _sweep_job(cfg: ExperimentConfig, minimum_r: int) -> _SweepJob:
    r_levels = cfg.require_sweep_r(minimum=minimum_r)
    if sorted(r_levels) != list(r_levels):
        raise ConfigurationError("sweep.R must be ascending")
    return _SweepJob(
        seed=cfg.seed,
        horizon=cfg.grid.horizon,
        dt=cfg.grid.dt,
        drift=cfg.drift,
        drift_params=tuple(sorted(cfg.drift_params.items())),
        r_levels=tuple(r_levels),
        noise_a=cfg.noise_a,
        noise_b=cfg.noise_b,
        initial=cfg.initial,
        cap=cfg.cap,
    )


def run_cauchy_in_r(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    job = _sweep_job(cfg, minimum_r=2)
    thr = {**DEFAULT_THRESHOLDS["cauchy_in_R"], **cfg.thresholds}
    per_rep = _parallel_map(partial(_pair_sups, job), cfg.size, threads)

    rows = []
    estimates = []
    for j in range(len(job.r_levels) - 1):
        est = _mean_stderr([math.sqrt(rep[j]) for rep in per_rep])
        estimates.append(est)
        rows.append(
            ResultRow(
                estimate=est.value,
                stderr=est.stderr,
                R=job.r_levels[j],
                m=est.replicates,
            )
        )

    checks = []
    factor = thr["stderr_factor"]
    for j in range(len(estimates) - 1):
        drop = estimates[j].value - estimates[j + 1].value
        noise_band = factor * math.hypot(estimates[j].stderr, estimates[j + 1].stderr)
        checks.append(
            CheckResult(
                name=f"decreasing_pair_{j}",
                passed=drop > noise_band,
                value=drop,
                threshold=f"> {factor}*stderr ({noise_band:.3g})",
            )
        )
    if "final_ratio" in thr and len(estimates) >= 2:
        first, last = estimates[0].value, estimates[-1].value
        checks.append(
            CheckResult(
                name="geometric_decay",
                passed=last <= first * thr["final_ratio"],
                value=last / first if first > 0 else math.inf,
                threshold=f"last <= first * {thr['final_ratio']}",
            )
        )

    summary: dict = {
        "r_levels": list(job.r_levels),
        "distances": [e.value for e in estimates],
        "stderrs": [e.stderr for e in estimates],
    }
    if len(job.r_levels) >= 3:
        last_sups = [rep[-1] for rep in per_rep]
        qs = np.quantile(last_sups, [0.5, 0.9, 0.99])
        residuals = [e.value for e in estimates]
        # exactly-zero residuals (truncation-inert drift) count as converged
        converged = (
            residuals[-1] < residuals[-2]
            or residuals[-1] <= 3.0 * estimates[-1].stderr + 1e-15
        )
        summary["pipeline"] = {
            "designated_R": job.r_levels[-1],
            "cauchy_residual": residuals[-1],
            "residuals": residuals,
            "converged": converged,
            "sup_distance_quantiles": {
                "0.5": float(qs[0]),
                "0.9": float(qs[1]),
                "0.99": float(qs[2]),
            },
        }
    return ExperimentResult("cauchy_in_R", rows, summary, checks)


def pipeline_limit(cfg: ExperimentConfig, threads: int = 1) -> dict:
    """Run the truncation sweep and report the extrapolated solution.

    Requires at least 3 truncation levels under paired driving noise; the
    largest level is designated the numerical solution and the distance to
    its predecessor is the Cauchy residual.
    """
    if len(cfg.sweep_r) < 3:
        raise ConfigurationError("pipeline_limit needs an R sweep with >= 3 levels")
    result = run_cauchy_in_r(cfg, threads)
    return result.summary["pipeline"]


def run_moment_uniformity(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    job = _sweep_job(cfg, minimum_r=2)
    thr = {**DEFAULT_THRESHOLDS["moment_uniformity"], **cfg.thresholds}
    p = float(cfg.option("moment_p", 2.0))
    per_rep = _parallel_map(partial(_sweep_sups, job), cfg.size, threads)

    rows = []
    values = []
    for j, R in enumerate(job.r_levels):
        est = _mean_stderr([rep[j] ** p for rep in per_rep])
        values.append(est.value)
        rows.append(
            ResultRow(estimate=est.value, stderr=est.stderr, R=R, m=est.replicates)
        )
    spread = (max(values) - min(values)) / min(values)
    checks = [
        CheckResult(
            name="uniform_in_R",
            passed=spread < thr["moment_spread"],
            value=spread,
            threshold=f"spread < {thr['moment_spread']}",
        )
    ]
    summary = {"r_levels": list(job.r_levels), "moments": values, "p": p, "spread": spread}
    return ExperimentResult("moment_uniformity", rows, summary, checks)


# ---------------------------------------------------------------------------
# gronwall


@dataclass(frozen=True)
class _GronwallJob:
    seed: int
    horizon: float
    dt: float
    size: int
    p: float
    r: float
    growth_max: float
    bound_max: float
    xi0_lo: float
    xi0_hi: float
    times: Tuple[float, ...]


def _gronwall_one(job: _GronwallJob, j: int) -> Tuple[float, float, float, float, float]:
    draw = np.random.default_rng(
        np.random.SeedSequence(entropy=job.seed, spawn_key=(j, 0))
    )
    lam = draw.uniform(0.0, job.growth_max)
    bound = draw.uniform(0.0, job.bound_max)
    xi0 = draw.uniform(job.xi0_lo, job.xi0_hi)
    path_seed = int(
        np.random.SeedSequence(entropy=job.seed, spawn_key=(j, 1)).generate_state(1)[0]
    )
    ensemble = PathEnsemble(TimeGrid(job.horizon, job.dt), job.size, path_seed)
    instance = simulate_instance(ensemble, lam, bound, xi0)
    report = gronwall_verify(
        instance, GronwallParams(job.p, job.r), list(job.times)
    )
    worst_t = min(report.rows, key=lambda row: row[3])[0]
    return report.min_margin, worst_t, lam, bound, xi0


def run_gronwall(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    thr = {**DEFAULT_THRESHOLDS["gronwall"], **cfg.thresholds}
    n_instances = int(cfg.option("n_instances", 200))
    params = GronwallParams(
        float(cfg.option("gronwall_p", 0.5)), float(cfg.option("gronwall_r", 2.0 / 3.0))
    )
    n = cfg.grid.n
    default_times = [cfg.grid.dt * max(1, (n * k) // 10) for k in range(1, 11)]
    times = tuple(float(t) for t in cfg.option("verify_times", default_times))
    job = _GronwallJob(
        seed=cfg.seed,
        horizon=cfg.grid.horizon,
        dt=cfg.grid.dt,
        size=cfg.size,
        p=params.p,
        r=params.r,
        growth_max=float(cfg.option("growth_max", 2.0)),
        bound_max=float(cfg.option("bound_max", 1.0)),
        xi0_lo=float(cfg.option("xi0_lo", 0.1)),
        xi0_hi=float(cfg.option("xi0_hi", 10.0)),
        times=times,
    )
    results = _parallel_map(partial(_gronwall_one, job), n_instances, threads)

    rows = []
    for margin, worst_t, _lam, _bound, _xi0 in results:
        rows.append(ResultRow(estimate=margin, t=worst_t, m=cfg.size))
    margins = [r[0] for r in results]
    worst = min(results, key=lambda r: r[0])

    control_dt = float(cfg.option("control_dt", 1e-7))
    control_growth = float(cfg.option("control_growth", 1.0))
    control_xi0 = float(cfg.option("control_xi0", 1.0))
    control = deterministic_instance(
        TimeGrid(1.0, control_dt), control_growth, control_xi0
    )
    control_report = gronwall_verify(control, params, [1.0])
    control_margin = control_report.rows[0][3]
    constant = cpr(params)

    checks = [
        CheckResult(
            name="all_margins_at_least_one",
            passed=worst[0] >= thr["min_margin"],
            value=worst[0],
            threshold=f">= {thr['min_margin']}",
        ),
        CheckResult(
            name="martingale_free_control",
            passed=abs(control_margin - constant) <= thr["control_tol"],
            value=control_margin,
            threshold=f"within {thr['control_tol']} of {constant:g}",
        ),
    ]
    summary = {
        "min_margin": worst[0],
        "worst_config": {
            "margin": worst[0],
            "t": worst[1],
            "growth_rate": worst[2],
            "integrand_bound": worst[3],
            "xi0": worst[4],
        },
        "margins_quantiles": {
            "0.0": float(np.min(margins)),
            "0.5": float(np.median(margins)),
            "1.0": float(np.max(margins)),
        },
        "control_margin": control_margin,
        "cpr": constant,
        "exponents": {"p": params.p, "r": params.r},
    }
    return ExperimentResult("gronwall", rows, summary, checks)


# ---------------------------------------------------------------------------
# krylov_check


def run_krylov_check(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    thr = {**DEFAULT_THRESHOLDS["krylov_check"], **cfg.thresholds}
    ensemble = PathEnsemble(cfg.grid, cfg.size, cfg.seed)
    report = krylov_check(
        lambda path: build_coefficients(cfg, path),
        ensemble,
        box_half_width=float(cfg.option("box_half_width", 2.0)),
        pair_samples=int(cfg.option("pair_samples", 256)),
        n_buckets=int(cfg.option("n_buckets", 10)),
        times_per_bucket=int(cfg.option("times_per_bucket", 8)),
        seed=cfg.seed,
    )
    rows = [
        ResultRow(estimate=val, t=0.5 * (lo + hi), m=cfg.size)
        for lo, hi, val in report.monotonicity
    ]
    checks = []
    summary = report.to_dict()
    trunc = cfg.option("truncate_R")
    if trunc is not None:
        lam = linear_noise(cfg.noise_a, cfg.noise_b).lipschitz_constant
        bound = 2.0 * float(trunc) + lam + lam * lam
        worst = max(val for _lo, _hi, val in report.monotonicity)
        summary["one_sided_lipschitz_bound"] = bound
        checks.append(
            CheckResult(
                name="monotonicity_within_truncated_bound",
                passed=worst <= bound + thr["bound_tol"],
                value=worst,
                threshold=f"<= 2R+Lambda+Lambda^2 = {bound:g}",
            )
        )
    return ExperimentResult("krylov_check", rows, summary, checks)


# ---------------------------------------------------------------------------
# registry

REGISTRY: Dict[str, Callable[[ExperimentConfig, int], ExperimentResult]] = {
    "exact_characteristic": run_exact_characteristic,
    "verhulst": run_verhulst,
    "exp_moment": run_exp_moment,
    "truncation_convergence": run_truncation_convergence,
    "cauchy_in_R": run_cauchy_in_r,
    "moment_uniformity": run_moment_uniformity,
    "gronwall": run_gronwall,
    "krylov_check": run_krylov_check,
}

DESCRIPTIONS: Dict[str, str] = {
    "exact_characteristic": "Euler solve vs the exact ramp characteristic, with dt-halving gain",
    "verhulst": "closed-form gradient solution, blow-up detection for negative data",
    "exp_moment": "exponential moments of the one-sided bound vs the eps^(-2p) power law",
    "truncation_convergence": "sup gap between the spike drift and its one-sided truncations",
    "cauchy_in_R": "L^(1/2) distance between solutions at consecutive truncation levels",
    "moment_uniformity": "sup-moments of truncated solutions stay level across R",
    "gronwall": "stochastic Gronwall margins over randomized inequality instances",
    "krylov_check": "sampled boundedness/monotonicity/coercivity constants per time bucket",
}

DEFAULT_THRESHOLDS: Dict[str, dict] = {
    "exact_characteristic": {
        "errors": {"max_error": 0.02, "ratio_lo": 1.2, "ratio_hi": 3.0},
        "trajectories": {"max_error_per_dt": 5.0, "terminal_per_dt": 3.0},
    },
    "verhulst": {"oracle_tol": 1e-9, "blowup_tol_steps": 4},
    "exp_moment": {"slope_lo": -0.75, "slope_hi": -0.25, "control_slope_tol": 0.02},
    "truncation_convergence": {"gap_rel_tol": 0.1},
    "cauchy_in_R": {"stderr_factor": 2.0, "final_ratio": 0.25},
    "moment_uniformity": {"moment_spread": 0.2},
    "gronwall": {"min_margin": 1.0, "control_tol": 1e-6},
    "krylov_check": {"bound_tol": 1e-9},
}


def run_experiment_config(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    return REGISTRY[cfg.experiment](cfg, threads)
