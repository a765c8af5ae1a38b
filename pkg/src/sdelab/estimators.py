"""Monte Carlo functionals over ensembles of solved trajectories.

All gap-type estimators are paired by replicate index: position i of both
sequences must come from the same Brownian path.  Reductions use exact
compensated summation (``math.fsum``) over replicate order, so reported
values do not depend on worker scheduling at all.

The time supremum is taken over grid nodes; the gap to the continuous-time
supremum is part of the discretization error budget.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError, HeavyTailWarning, PairingError
from .paths import BrownianPath, PathEnsemble
from .solver import SamplePath

__all__ = [
    "EstimateWithCI",
    "SlopeFit",
    "cauchy_metric",
    "sup_moment",
    "exp_moment_I",
    "loglog_slope",
    "short_time_gap",
]


@dataclass(frozen=True)
class EstimateWithCI:
    """Monte Carlo mean with stderr = sample standard deviation / sqrt(M)."""

    value: float
    stderr: float
    replicates: int


def _estimate(values: Sequence[float]) -> EstimateWithCI:
    m = len(values)
    mean = math.fsum(values) / m
    if m > 1:
        var = math.fsum((v - mean) ** 2 for v in values) / (m - 1)
        stderr = math.sqrt(var / m)
    else:
        stderr = 0.0
    return EstimateWithCI(value=mean, stderr=stderr, replicates=m)


def _check_paired(a: Sequence[SamplePath], b: Sequence[SamplePath]) -> None:
    if len(a) != len(b) or len(a) == 0:
        raise PairingError(f"ensemble sizes differ: {len(a)} vs {len(b)}")
    if a[0].grid != b[0].grid:
        raise PairingError("ensembles live on different grids")
    for pa, pb in zip(a, b):
        if pa.path_id != pb.path_id:
            raise PairingError(
                f"replicate indexing differs: {pa.path_id} vs {pb.path_id}"
            )


def cauchy_metric(
    a: Sequence[SamplePath], b: Sequence[SamplePath]
) -> EstimateWithCI:
    """d(A, B) = mean over paired replicates of (sup_k |A_k - B_k|)^(1/2).

    This is the metric of L^(1/2)(Omega; C([0,T])) restricted to the grid;
    it is not a norm, but satisfies the triangle inequality.
    """
    _check_paired(a, b)
    vals = [
        math.sqrt(float(np.max(np.abs(pa.values - pb.values))))
        for pa, pb in zip(a, b)
    ]
    return _estimate(vals)


def sup_moment(a: Sequence[SamplePath], p: float) -> EstimateWithCI:
    """Mean of (sup_k |X_k|)^p over the ensemble."""
    if not p > 0.0:
        raise DomainError(f"moment order must be positive, got {p}")
    vals = [float(np.max(np.abs(pa.values))) ** p for pa in a]
    return _estimate(vals)


KProfile = Callable[[BrownianPath], np.ndarray]


def exp_moment_I(
    k_profile: KProfile,
    ensemble: Union[PathEnsemble, Iterable[BrownianPath]],
    eps: float,
    p: float,
    T: float,
) -> EstimateWithCI:
    """Mean of exp(p * integral_eps^T K(s) ds) over the ensemble.

    ``k_profile(path)`` must return K at every grid node (node 0 may be
    +inf; it is never integrated since eps > 0).  The integral is the
    trapezoid rule between the grid-aligned times eps and T.  Warns with
    :class:`HeavyTailWarning` when the sample coefficient of variation
    exceeds 2.
    """
    if eps <= 0.0:
        raise DomainError(
            "eps = 0 is outside the domain: the integral diverges at t = 0"
        )
    if not p > 0.0:
        raise DomainError(f"exponent must be positive, got {p}")
    vals: List[float] = []
    for path in ensemble:
        grid = path.grid
        i0, i1 = grid.index_of(eps), grid.index_of(T)
        if i0 >= i1:
            raise DomainError(f"need eps < T on the grid, got {eps} >= {T}")
        profile = k_profile(path)
        integ = float(trapezoid(profile[i0 : i1 + 1], dx=grid.dt))
        vals.append(math.exp(p * integ))
    est = _estimate(vals)
    if est.value > 0.0 and est.replicates > 1:
        cv = est.stderr * math.sqrt(est.replicates) / est.value
        if cv > 2.0:
            warnings.warn(
                f"exponential moment is heavy-tailed (CV={cv:.2f}); the mean "
                "may be dominated by a few replicates",
                HeavyTailWarning,
                stacklevel=2,
            )
    return est


@dataclass(frozen=True)
class SlopeFit:
    """Ordinary least squares fit of log y against log x."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int


def loglog_slope(points: Sequence[Tuple[float, float]]) -> SlopeFit:
    if len(points) < 3:
        raise DomainError(f"need at least 3 points, got {len(points)}")
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise DomainError("log-log fit needs strictly positive coordinates")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return SlopeFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r2,
        n_points=len(points),
    )


def short_time_gap(
    a: Sequence[SamplePath],
    b: Sequence[SamplePath],
    eps_grid: Sequence[float],
) -> List[Tuple[float, float]]:
    """For each eps: sup over nodes t <= eps of the mean absolute gap."""
    _check_paired(a, b)
    grid = a[0].grid
    acc = np.zeros(grid.n + 1)
    for pa, pb in zip(a, b):
        acc += np.abs(pa.values - pb.values)
    mean_gap = acc / len(a)
    running = np.maximum.accumulate(mean_gap)
    return [(float(e), float(running[grid.index_of(e)])) for e in eps_grid]
