"""Numerical verification of the stochastic Gronwall inequality.

For nonnegative adapted xi, eta, a nondecreasing A with A(0) = 0 and a
local martingale M with M(0) = 0 satisfying the pathwise inequality

    d xi <= eta dt + xi dA + dM,

the inequality bounds, for 0 < p < r < 1,

    (E sup_{s<=t} xi^p)^(1/p)
        <= C_{p,r} (E exp(r/(1-r) A(t)))^((1-r)/r) E[xi(0) + int_0^t eta ds]

with C_{p,r} = (r/(r-p))^(1/p).  The bound is uniform over the martingale
part, which is what restricts p below 1.

Instances here are built on a grid so that the discrete inequality

    xi_{k+1} - xi_k <= eta_k dt + xi_k (A_{k+1}-A_k) + (M_{k+1}-M_k)

holds exactly per path by construction, and any direct-data constructor
re-validates it and rejects violating arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, DomainError, HeavyTailError
from .paths import PathEnsemble, TimeGrid

__all__ = [
    "GronwallParams",
    "GronwallInstance",
    "cpr",
    "simulate_instance",
    "deterministic_instance",
    "gronwall_lhs",
    "gronwall_rhs",
    "gronwall_verify",
    "VerifyReport",
]


@dataclass(frozen=True)
class GronwallParams:
    p: float
    r: float

    def __post_init__(self):
        if not (0.0 < self.p < self.r < 1.0):
            raise DomainError(
                f"exponents must satisfy 0 < p < r < 1, got p={self.p}, r={self.r}"
            )


def cpr(params: GronwallParams) -> float:
    """The constant (r/(r-p))^(1/p); diverges as r decreases to p."""
    return (params.r / (params.r - params.p)) ** (1.0 / params.p)


@dataclass(frozen=True)
class GronwallInstance:
    """An ensemble of discrete inequality instances on one grid.

    ``xi`` has one row per path.  ``bound`` (the process A) may be a single
    shared row for deterministic A.  ``eta`` and ``martingale`` may be None,
    meaning identically zero; this keeps large deterministic control
    instances cheap.
    """

    grid: TimeGrid
    xi: np.ndarray
    bound: np.ndarray
    eta: Optional[np.ndarray] = None
    martingale: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.grid.n
        if self.xi.ndim != 2 or self.xi.shape[1] != n + 1:
            raise ConfigurationError("xi must have shape (paths, nodes)")
        if self.bound.shape[-1] != n + 1:
            raise ConfigurationError("bound must have one value per node")
        if np.any(self.xi < 0.0):
            raise ConfigurationError("xi must be nonnegative")
        if self.eta is not None and np.any(self.eta < 0.0):
            raise ConfigurationError("eta must be nonnegative")
        a = np.atleast_2d(self.bound)
        if np.any(a[:, 0] != 0.0):
            raise ConfigurationError("bound process must start at 0")
        if np.any(np.diff(a, axis=1) < 0.0):
            raise ConfigurationError("bound process must be nondecreasing")
        if self.martingale is not None and np.any(self.martingale[:, 0] != 0.0):
            raise ConfigurationError("martingale must start at 0")
        self._validate_inequality()
        for arr in (self.xi, self.bound, self.eta, self.martingale):
            if arr is not None:
                arr.setflags(write=False)

    def _validate_inequality(self):
        dt = self.grid.dt
        lhs = np.diff(self.xi, axis=1)
        budget = self.xi[:, :-1] * np.diff(np.atleast_2d(self.bound), axis=1)
        if self.eta is not None:
            budget = budget + self.eta[:, :-1] * dt
        if self.martingale is not None:
            budget = budget + np.diff(self.martingale, axis=1)
        scale = 1.0 + np.abs(self.xi[:, :-1]) + np.abs(budget)
        bad = lhs > budget + 1e-9 * scale
        if np.any(bad):
            i, k = np.argwhere(bad)[0]
            raise ConfigurationError(
                "pathwise inequality violated at "
                f"path {i}, step {k}: increment {lhs[i, k]!r} exceeds "
                f"budget {budget[i, k]!r}"
            )

    @property
    def size(self) -> int:
        return self.xi.shape[0]


def simulate_instance(
    ensemble: PathEnsemble,
    growth_rate: float,
    integrand_bound: float,
    xi0: float,
    eta0: float = 0.0,
) -> GronwallInstance:
    """Generate an instance by taking the inequality with equality.

    A(t) = growth_rate * t; the martingale increment is
    integrand_bound * xi_k * dW~_k with dW~ the Brownian increment clipped
    symmetrically to [-1, 1].  Clipping a symmetric zero-mean increment
    keeps the increments independent and mean-zero, so partial sums remain
    a martingale, and it makes nonnegativity unconditional: with
    integrand_bound <= 1 the step factor 1 + dA + bound*dW~ is >= 0, so the
    xi >= 0 clamp below can never activate and the equality construction is
    exact.  Bounds above 1 are rejected because a single extreme increment
    could then push xi negative and clamping would break the inequality.
    """
    if growth_rate < 0.0:
        raise ConfigurationError("growth rate must be >= 0 (A is nondecreasing)")
    if not 0.0 <= integrand_bound <= 1.0:
        raise ConfigurationError(
            f"integrand bound must lie in [0, 1], got {integrand_bound}"
        )
    if xi0 < 0.0 or eta0 < 0.0:
        raise ConfigurationError("xi0 and eta0 must be nonnegative")
    grid = ensemble.grid
    n, m = grid.n, len(ensemble)
    dt = grid.dt
    dw = np.empty((m, n))
    for i in range(m):
        dw[i] = ensemble.path(i).increments()
    np.clip(dw, -1.0, 1.0, out=dw)

    da = growth_rate * dt
    xi = np.empty((m, n + 1))
    xi[:, 0] = xi0
    mart = np.zeros((m, n + 1))
    b = integrand_bound
    for k in range(n):
        dm = b * xi[:, k] * dw[:, k]
        step = xi[:, k] * (1.0 + da) + eta0 * dt + dm
        xi[:, k + 1] = np.maximum(step, 0.0)  # provably inert, see docstring
        mart[:, k + 1] = mart[:, k] + dm
    bound = growth_rate * grid.times()
    eta = np.full((m, n + 1), eta0) if eta0 > 0.0 else None
    return GronwallInstance(
        grid=grid,
        xi=xi,
        bound=bound,
        eta=eta,
        martingale=mart if b > 0.0 else None,
    )


def deterministic_instance(
    grid: TimeGrid, growth_rate: float, xi0: float
) -> GronwallInstance:
    """Martingale-free control: one path with xi_{k+1} = xi_k (1 + dA)."""
    if growth_rate < 0.0 or xi0 < 0.0:
        raise ConfigurationError("growth rate and xi0 must be nonnegative")
    n = grid.n
    factors = np.concatenate(
        ([1.0], np.cumprod(np.full(n, 1.0 + growth_rate * grid.dt)))
    )
    xi = xi0 * factors[np.newaxis, :]
    bound = growth_rate * grid.times()
    return GronwallInstance(grid=grid, xi=xi, bound=bound)


def _drive_term(instance: GronwallInstance, k: int) -> float:
    # E[xi(0) + int_0^t eta ds], left-endpoint rule matching the step budget
    drive = instance.xi[:, 0].copy()
    if instance.eta is not None:
        drive = drive + instance.eta[:, :k].sum(axis=1) * instance.grid.dt
    return float(np.mean(drive))


def gronwall_rhs(instance: GronwallInstance, params: GronwallParams, t: float) -> float:
    """C_{p,r} * (E exp(r/(1-r) A(t)))^((1-r)/r) * E[xi(0) + int_0^t eta]."""
    k = instance.grid.index_of(t)
    ratio = params.r / (1.0 - params.r)
    a_t = np.atleast_2d(instance.bound)[:, k]
    with np.errstate(over="raise"):
        try:
            exp_term = float(np.mean(np.exp(ratio * a_t)))
        except FloatingPointError as exc:
            raise HeavyTailError(
                "exponential moment of A overflowed; use a smaller r or a "
                "slower-growing A"
            ) from exc
    if not math.isfinite(exp_term):
        raise HeavyTailError(
            "exponential moment of A overflowed; use a smaller r or a "
            "slower-growing A"
        )
    return cpr(params) * exp_term ** ((1.0 - params.r) / params.r) * _drive_term(
        instance, k
    )


def gronwall_lhs(instance: GronwallInstance, params: GronwallParams, t: float) -> float:
    """(E sup_{s<=t} xi^p)^(1/p) over the instance ensemble."""
    k = instance.grid.index_of(t)
    sup = np.max(instance.xi[:, : k + 1], axis=1)
    return float(np.mean(sup**params.p)) ** (1.0 / params.p)


@dataclass(frozen=True)
class VerifyReport:
    """Per-time margins RHS / LHS; any margin below 1 is a failure."""

    rows: Tuple[Tuple[float, float, float, float], ...]  # (t, lhs, rhs, margin)
    min_margin: float
    passed: bool
    witness_t: Optional[float]

    def to_dict(self) -> dict:
        return {
            "rows": [list(r) for r in self.rows],
            "min_margin": self.min_margin,
            "passed": self.passed,
            "witness_t": self.witness_t,
        }


def gronwall_verify(
    instance: GronwallInstance,
    params: GronwallParams,
    t_values: Sequence[float],
) -> VerifyReport:
    if len(t_values) == 0:
        raise ConfigurationError("need at least one verification time")
    running = np.maximum.accumulate(instance.xi, axis=1)
    rows = []
    min_margin = math.inf
    witness = None
    for t in t_values:
        k = instance.grid.index_of(t)
        lhs = float(np.mean(running[:, k] ** params.p)) ** (1.0 / params.p)
        rhs = gronwall_rhs(instance, params, t)
        margin = math.inf if lhs == 0.0 else rhs / lhs
        rows.append((float(t), lhs, rhs, margin))
        if margin < min_margin:
            min_margin = margin
            if margin < 1.0 and witness is None:
                witness = float(t)
    return VerifyReport(
        rows=tuple(rows),
        min_margin=min_margin,
        passed=min_margin >= 1.0,
        witness_t=witness,
    )
