"""Euler--Maruyama integration and exact closed-form oracles.

The scheme is explicit Euler with drift and noise frozen at the left
endpoint, the normative Ito form of the equation:

    X_{k+1} = X_k + [u(t_k, X_k) + (1/4)(sigma^2)'(t_k, X_k)] dt
                  + sigma(t_k, X_k) (W_{k+1} - W_k),

stopped (frozen) at the first exit from [-N, N].  Two exact solutions back
the convergence tests: the Hunter--Saxton characteristic x * E(t) with E the
ramp-edge factor, and the stochastic Verhulst gradient solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .coefficients import CoefficientSet, CoefficientSource, HunterSaxtonParams, _bind
from .errors import (
    BlowUpError,
    ConfigurationError,
    DomainError,
    SolverError,
)
from .paths import BrownianPath, PathEnsemble, TimeGrid

__all__ = [
    "SolveConfig",
    "SamplePath",
    "euler_solve",
    "hs_exact_characteristic",
    "verhulst_exact",
    "verhulst_blowup_time",
    "krylov_check",
    "KrylovReport",
]


@dataclass(frozen=True)
class SolveConfig:
    """Initial point and stopping cap; only explicit Euler is provided."""

    initial: float
    cap: float = 1e6
    scheme: str = "euler"

    def __post_init__(self):
        if self.scheme != "euler":
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if not self.cap > abs(self.initial):
            raise ConfigurationError("cap must exceed |initial point|")


@dataclass(frozen=True)
class SamplePath:
    """One solved trajectory, frozen from the cap index on (if any)."""

    grid: TimeGrid
    values: np.ndarray
    cap: float
    cap_index: Optional[int]
    path_id: int

    def __post_init__(self):
        self.values.setflags(write=False)


def euler_solve(
    coeffs: CoefficientSet, path: BrownianPath, cfg: SolveConfig
) -> SamplePath:
    """Integrate the SDE along ``path``; deterministic in its inputs.

    Raises :class:`SolverError` carrying (t_k, X_k, path id) if any
    coefficient evaluates to a non-finite value.
    """
    grid = path.grid
    dt = grid.dt
    n = grid.n
    w = path.values.tolist()
    u = coeffs.drift
    s2p = coeffs.noise_sq_deriv
    sig = coeffs.noise
    cap = cfg.cap
    pid = path.stream.replicate

    out = [0.0] * (n + 1)
    x = cfg.initial
    out[0] = x
    cap_index = None
    isfinite = math.isfinite
    for k in range(n):
        t = k * dt
        du = u(t, x)
        dn = s2p(t, x)
        ds = sig(t, x)
        if not isfinite(du + dn + ds):
            raise SolverError("non-finite coefficient", t, x, pid)
        x = x + (du + 0.25 * dn) * dt + ds * (w[k + 1] - w[k])
        out[k + 1] = x
        if cap_index is None and abs(x) > cap:
            cap_index = k + 1
            for j in range(k + 2, n + 1):
                out[j] = x
            break
    return SamplePath(
        grid=grid,
        values=np.asarray(out),
        cap=cap,
        cap_index=cap_index,
        path_id=pid,
    )


# ---------------------------------------------------------------------------
# exact oracles


def hs_exact_characteristic(
    params: HunterSaxtonParams, path: BrownianPath, x: float, t: float
) -> float:
    """Exact characteristic x * ramp_edge(t) for x in [0, 1), t pre-blow-up."""
    if params.path is not path:
        raise ConfigurationError("params cache was built on a different path")
    if not 0.0 <= x < 1.0:
        raise DomainError(f"characteristic start must lie in [0, 1), got {x}")
    k = path.grid.index_of(t)
    if params.blowup_index is not None and k >= params.blowup_index:
        raise DomainError(
            f"t={t} is at or past the blow-up time {params.blowup_time}"
        )
    return x * float(params.ramp_edge[k])


def _verhulst_state(q0: float, sprime: float, path: BrownianPath):
    if q0 == 0.0:
        raise ConfigurationError("initial gradient must be nonzero")
    weight = np.exp(-sprime * path.values)
    denom = 1.0 / q0 + 0.5 * cumulative_trapezoid(
        weight, dx=path.grid.dt, initial=0.0
    )
    return weight, denom


def verhulst_blowup_time(
    q0: float, sprime: float, path: BrownianPath
) -> Optional[float]:
    """First time the Verhulst denominator crosses zero, or None.

    The crossing is located by linear interpolation between the two
    straddling grid nodes; only negative initial data can blow up.
    """
    _, denom = _verhulst_state(q0, sprime, path)
    if denom[0] >= 0.0:
        return None
    hit = np.nonzero(denom >= 0.0)[0]
    if hit.size == 0:
        return None
    k = int(hit[0])
    dt = path.grid.dt
    d0, d1 = float(denom[k - 1]), float(denom[k])
    if d1 == d0:
        return k * dt
    return (k - 1) * dt + dt * (-d0) / (d1 - d0)


def verhulst_exact(q0: float, sprime: float, path: BrownianPath, t: float) -> float:
    """Stochastic Verhulst gradient solution at a grid time.

        Q(t) = exp(-sprime W(t)) / (1/q0 + 0.5 integral_0^t exp(-sprime W) ds)

    with trapezoid quadrature.  Raises :class:`BlowUpError` carrying the
    interpolated crossing time if the denominator vanishes on (0, t].
    """
    weight, denom = _verhulst_state(q0, sprime, path)
    k = path.grid.index_of(t)
    if denom[0] < 0.0:
        hit = np.nonzero(denom >= 0.0)[0]
        if hit.size and hit[0] <= k:
            raise BlowUpError(
                "denominator crossed zero",
                verhulst_blowup_time(q0, sprime, path),
            )
    return float(weight[k] / denom[k])


# ---------------------------------------------------------------------------
# empirical check of the classical random-coefficient well-posedness bounds


@dataclass(frozen=True)
class KrylovReport:
    """Sampled boundedness / monotonicity / coercivity constants.

    ``monotonicity`` holds per-time-bucket maxima of

        [2 (x-y)(b(t,x)-b(t,y)) + |sigma(t,x)-sigma(t,y)|^2] / |x-y|^2

    with b = u + (1/4)(sigma^2)', so a divergence of the one-sided Lipschitz
    constant near t = 0 is visible in the earliest bucket.
    """

    boundedness_integral: float
    monotonicity: tuple  # of (t_lo, t_hi, value)
    coercivity: float
    box_half_width: float
    pair_samples: int

    def to_dict(self) -> dict:
        return {
            "boundedness_integral": self.boundedness_integral,
            "monotonicity": [list(row) for row in self.monotonicity],
            "coercivity": self.coercivity,
            "box_half_width": self.box_half_width,
            "pair_samples": self.pair_samples,
        }


def krylov_check(
    coeffs: CoefficientSource,
    ensemble: PathEnsemble,
    box_half_width: float,
    pair_samples: int = 256,
    n_buckets: int = 10,
    times_per_bucket: int = 8,
    seed: int = 0,
) -> KrylovReport:
    """Estimate the three classical conditions over sampled points.

    Report-only: (i) the time integral of sup_{|x|<l} (|b| + sigma^2), (ii)
    the smallest per-bucket monotonicity constant over sampled pairs, (iii)
    the coercivity constant over sampled x.  Pairs and probe points are
    drawn from a dedicated deterministic stream.
    """
    if box_half_width <= 0.0:
        raise ConfigurationError("probe box half-width must be positive")
    if pair_samples < 1 or n_buckets < 1:
        raise ConfigurationError("need at least one pair sample and one bucket")
    grid = ensemble.grid
    rng = np.random.default_rng(seed)
    ell = box_half_width

    xs = np.linspace(-ell, ell, 41)
    pairs = rng.uniform(-ell, ell, size=(pair_samples, 2))
    # keep pair separations away from the quotient's numerical noise floor
    tiny = np.abs(pairs[:, 0] - pairs[:, 1]) < 1e-6 * ell
    pairs[tiny, 1] += 2e-6 * ell

    edges = np.linspace(0.0, grid.horizon, n_buckets + 1)
    bucket_times = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        k_lo = max(1, int(math.ceil(lo / grid.dt)))
        k_hi = int(math.floor(hi / grid.dt))
        ks = np.unique(
            np.linspace(k_lo, max(k_lo, k_hi), times_per_bucket).astype(int)
        )
        bucket_times.append(ks * grid.dt)

    def b_of(cs, t, x):
        return cs.drift(t, x) + 0.25 * cs.noise_sq_deriv(t, x)

    sup_integrand = np.zeros(grid.n + 1)
    mono = [-math.inf] * n_buckets
    coercivity = -math.inf

    for i in range(len(ensemble)):
        path = ensemble.path(i)
        cs = _bind(coeffs, path)
        # (i): sup over the probe box, every node except t = 0 kept cheap
        stride = max(1, grid.n // 256)
        for k in range(1, grid.n + 1, stride):
            t = k * grid.dt
            m = max(
                abs(b_of(cs, t, x)) + cs.noise(t, x) ** 2 for x in xs
            )
            sup_integrand[k] = max(sup_integrand[k], m)
        for j, ts in enumerate(bucket_times):
            worst = mono[j]
            for t in ts:
                for x, y in pairs:
                    num = 2.0 * (x - y) * (b_of(cs, t, x) - b_of(cs, t, y))
                    num += (cs.noise(t, x) - cs.noise(t, y)) ** 2
                    val = num / (x - y) ** 2
                    if val > worst:
                        worst = val
                for x in xs:
                    c = (2.0 * x * b_of(cs, t, x) + cs.noise(t, x) ** 2) / (
                        1.0 + x * x
                    )
                    if c > coercivity:
                        coercivity = c
            mono[j] = worst

    # fill the strided sup-integrand by forward propagation, then trapezoid
    filled = sup_integrand.copy()
    last = 0.0
    for k in range(1, grid.n + 1):
        if filled[k] == 0.0:
            filled[k] = last
        else:
            last = filled[k]
    boundedness = float(trapezoid(filled, dx=grid.dt))

    rows = tuple(
        (float(lo), float(hi), float(val))
        for lo, hi, val in zip(edges[:-1], edges[1:], mono)
    )
    return KrylovReport(
        boundedness_integral=boundedness,
        monotonicity=rows,
        coercivity=float(coercivity),
        box_half_width=ell,
        pair_samples=pair_samples,
    )
