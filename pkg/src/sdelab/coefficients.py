"""Coefficient fields for the SDE dX = u dt + (1/4)(sigma^2)' dt + sigma dW.

A :class:`CoefficientSet` bundles pointwise evaluators for the drift u, its
x-gradient q, the noise sigma and (sigma^2)', plus two optional processes:

* ``oleinik``   -- a one-sided gradient bound K(t) with q(t, x) <= K(t),
* ``lipschitz`` -- a bound Lambda(t) on the x-Lipschitz constants of both
  sigma and (sigma^2)'.

Path-dependent sets bind to exactly one Brownian path at construction and
are immutable afterwards, so they can be shared freely across workers.

Built-in drifts:

* ``zero_drift``   -- u = 0.
* ``spike_drift``  -- deterministic drift whose gradient x^(-alpha) on (0, 1]
  is square-integrable but unbounded above; the canonical fixture for the
  one-sided truncation operator.
* ``hs_drift``     -- the stochastic Hunter--Saxton characteristic drift: a
  random downward ramp that steepens and breaks in finite time, after which
  the drift is identically zero (the dissipative continuation).
* ``expanding_fan_drift`` -- the positive-gradient mirror of the ramp, whose
  monotonicity constant blows up like 2/t near t = 0; used to document why a
  plain one-sided Lipschitz theory cannot start at t = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad

from .errors import (
    ConfigurationError,
    DomainError,
    UnsupportedCoefficientError,
)
from .paths import BrownianPath, PathEnsemble

__all__ = [
    "CoefficientSet",
    "LinearNoise",
    "SpikeDriftParams",
    "HunterSaxtonParams",
    "theta_R",
    "truncate_drift",
    "zero_drift",
    "spike_drift",
    "hs_drift",
    "expanding_fan_drift",
    "linear_noise",
    "attach_noise",
    "oleinik_K",
    "oleinik_profile",
    "check_assumptions",
    "AssumptionCheck",
    "AssumptionReport",
]

Evaluator = Callable[[float, float], float]
TimeProcess = Callable[[float], float]


def _zero_field(t: float, x: float) -> float:
    return 0.0


@dataclass(frozen=True)
class CoefficientSet:
    """Evaluators for one coefficient choice, bound to at most one path.

    ``left_anchor`` is a point x_L with u(t, x) = u(t, x_L) for all x <= x_L
    (both built-in drifts vanish left of 0); it anchors the quadrature in
    :func:`truncate_drift`.  ``closed_form_truncation`` maps a level R > 0 to
    exact (drift, gradient) evaluators of the truncated field, bypassing
    numeric quadrature.
    """

    name: str
    drift: Evaluator
    gradient: Optional[Evaluator] = None
    noise: Evaluator = _zero_field
    noise_sq_deriv: Evaluator = _zero_field
    oleinik: Optional[TimeProcess] = None
    lipschitz: Optional[TimeProcess] = None
    left_anchor: Optional[float] = None
    closed_form_truncation: Optional[Callable[[float], tuple]] = None


# ---------------------------------------------------------------------------
# one-sided truncation


def theta_R(g: float, R: float) -> float:
    """One-sided cap at level R: g for g <= R, else R. Never cuts below."""
    if R <= 0.0:
        raise ConfigurationError(f"truncation level must be positive, got {R}")
    return g if g <= R else R


def truncate_drift(base: CoefficientSet, R: float) -> CoefficientSet:
    """Cap the positive part of the drift gradient at level R.

    Returns a set whose gradient is theta_R(q) and whose drift is

        u_R(t, x) = u(t, x_L) + integral_{x_L}^{x} theta_R(q(t, y)) dy.

    Exact closed forms are used when the base set provides them; otherwise
    the integral is evaluated by adaptive quadrature from the left anchor.
    """
    if R <= 0.0:
        raise ConfigurationError(f"truncation level must be positive, got {R}")
    if base.closed_form_truncation is not None:
        drift_r, gradient_r = base.closed_form_truncation(R)
    else:
        if base.gradient is None:
            raise UnsupportedCoefficientError(
                f"{base.name}: truncation needs a gradient evaluator"
            )
        if base.left_anchor is None:
            raise UnsupportedCoefficientError(
                f"{base.name}: truncation needs a left anchor point"
            )
        anchor = base.left_anchor
        base_drift, base_gradient = base.drift, base.gradient

        def drift_r(t, x, _a=anchor, _R=R):
            if x <= _a:
                return base_drift(t, x)
            val, _err = quad(
                lambda y: min(base_gradient(t, y), _R), _a, x, limit=200
            )
            return base_drift(t, _a) + val

        def gradient_r(t, x, _R=R):
            return min(base_gradient(t, x), _R)

    # theta_R(q) <= R, so the constant R is a valid one-sided bound whenever
    # the base set did not already carry a (then still valid) bound.
    bound = base.oleinik if base.oleinik is not None else (lambda t, _R=R: _R)
    return replace(
        base,
        name=f"{base.name}_trunc{R:g}",
        drift=drift_r,
        gradient=gradient_r,
        oleinik=bound,
        closed_form_truncation=None,
    )


# ---------------------------------------------------------------------------
# noise models


@dataclass(frozen=True)
class LinearNoise:
    """sigma(x) = intercept + slope * x; degenerate choices are allowed."""

    intercept: float
    slope: float

    def sigma(self, t: float, x: float) -> float:
        return self.intercept + self.slope * x

    def sigma_sq_deriv(self, t: float, x: float) -> float:
        return 2.0 * self.slope * (self.intercept + self.slope * x)

    @property
    def lipschitz_constant(self) -> float:
        # |sigma(x)-sigma(y)| <= |slope| |x-y|;
        # |(sigma^2)'(x)-(sigma^2)'(y)| <= 2 slope^2 |x-y|.
        return max(abs(self.slope), 2.0 * self.slope * self.slope)


def linear_noise(a: float, b: float) -> LinearNoise:
    return LinearNoise(intercept=a, slope=b)


def attach_noise(base: CoefficientSet, noise: LinearNoise) -> CoefficientSet:
    lam = noise.lipschitz_constant
    return replace(
        base,
        name=f"{base.name}+linear({noise.intercept:g},{noise.slope:g})",
        noise=noise.sigma,
        noise_sq_deriv=noise.sigma_sq_deriv,
        lipschitz=lambda t, _l=lam: _l,
    )


# ---------------------------------------------------------------------------
# built-in drifts


def zero_drift() -> CoefficientSet:
    return CoefficientSet(
        name="zero",
        drift=_zero_field,
        gradient=_zero_field,
        left_anchor=0.0,
        closed_form_truncation=lambda R: (_zero_field, _zero_field),
    )


@dataclass(frozen=True)
class SpikeDriftParams:
    """Gradient x^(-exponent) on (0, 1], zero elsewhere; support width 1.

    The gradient is in L^2 (integral 1/(1-2*exponent)) but unbounded above,
    so the drift violates any one-sided bound near 0 until truncated.
    """

    exponent: float = 1.0 / 3.0

    def __post_init__(self):
        if not 0.0 < self.exponent < 0.5:
            raise ConfigurationError(
                f"spike exponent must lie in (0, 1/2), got {self.exponent}"
            )

    @property
    def gradient_l2_squared(self) -> float:
        return 1.0 / (1.0 - 2.0 * self.exponent)

    def truncation_cutoff(self, R: float) -> float:
        """Left of this point the gradient exceeds R (capped at 1)."""
        return min(R ** (-1.0 / self.exponent), 1.0)

    def truncation_gap(self, R: float) -> float:
        """Closed-form sup_x (u - u_R)(x) = alpha/(1-alpha) * R^(1-1/alpha)."""
        a = self.exponent
        return a / (1.0 - a) * R ** (1.0 - 1.0 / a)


def spike_drift(params: SpikeDriftParams = SpikeDriftParams()) -> CoefficientSet:
    a = params.exponent
    one_minus = 1.0 - a
    plateau = 1.0 / one_minus

    def drift(t, x):
        if x <= 0.0:
            return 0.0
        if x <= 1.0:
            return x**one_minus / one_minus
        return plateau

    def gradient(t, x):
        if 0.0 < x <= 1.0:
            return x**-a
        return 0.0

    def closed_form(R, _a=a):
        xc = min(R ** (-1.0 / _a), 1.0)
        om = 1.0 - _a
        at_cut = R * xc
        top = at_cut + (1.0 - xc**om) / om if xc < 1.0 else at_cut

        def drift_r(t, x):
            if x <= 0.0:
                return 0.0
            if x <= xc:
                return R * x
            if x <= 1.0:
                return at_cut + (x**om - xc**om) / om
            return top

        def gradient_r(t, x):
            if 0.0 < x <= 1.0:
                return min(x**-_a, R)
            return 0.0

        return drift_r, gradient_r

    return CoefficientSet(
        name=f"spike(alpha={a:g})",
        drift=drift,
        gradient=gradient,
        left_anchor=0.0,
        closed_form_truncation=closed_form,
    )


@dataclass(frozen=True)
class HunterSaxtonParams:
    """Path-bound state of the Hunter--Saxton characteristic drift.

    ``noise_slope`` is the slope of the linear noise sigma(x) = noise_slope*x
    entering the exponential weights; ``breaking_threshold`` (> 0) is the
    level that half the accumulated weight integral must reach for the wave
    to break.  The drift's initial gradient is -1/breaking_threshold.

    All quadratures (trapezoid) live on the grid of the bound path:

    * ``area``            A(t) = integral_0^t exp(-noise_slope * W) ds,
    * ``blowup_index``    first node with area/2 >= breaking_threshold,
    * ``gradient_factor`` g(t) = exp(-noise_slope*W) / (area/2 - threshold),
      zero from the blow-up node on,
    * ``ramp_edge``       the moving right edge of the linear ramp,
      exp(noise_slope*W(t) + integral_0^t g ds), NaN from blow-up on.
    """

    noise_slope: float
    breaking_threshold: float
    path: BrownianPath
    area: np.ndarray = field(init=False, repr=False)
    blowup_index: Optional[int] = field(init=False, repr=False)
    gradient_factor: np.ndarray = field(init=False, repr=False)
    ramp_edge: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.breaking_threshold <= 0.0:
            raise ConfigurationError(
                f"breaking threshold must be positive, got {self.breaking_threshold}"
            )
        w = self.path.values
        dt = self.path.grid.dt
        weight = np.exp(-self.noise_slope * w)
        area = cumulative_trapezoid(weight, dx=dt, initial=0.0)
        denom = 0.5 * area - self.breaking_threshold
        hit = np.nonzero(denom >= 0.0)[0]
        k_star = int(hit[0]) if hit.size else None
        g = np.zeros_like(area)
        live = slice(0, k_star) if k_star is not None else slice(None)
        g[live] = weight[live] / denom[live]
        edge = np.full_like(area, np.nan)
        exponent = self.noise_slope * w[live] + cumulative_trapezoid(
            g[live], dx=dt, initial=0.0
        )
        edge[live] = np.exp(exponent)
        object.__setattr__(self, "area", area)
        object.__setattr__(self, "blowup_index", k_star)
        object.__setattr__(self, "gradient_factor", g)
        object.__setattr__(self, "ramp_edge", edge)
        for arr in (self.area, self.gradient_factor, self.ramp_edge):
            arr.setflags(write=False)

    @property
    def blowup_time(self) -> Optional[float]:
        if self.blowup_index is None:
            return None
        return self.blowup_index * self.path.grid.dt

    def horizon_index(self, safety: float = 0.9) -> int:
        """Last node with area/2 <= safety * threshold (pre-blow-up window)."""
        ok = np.nonzero(0.5 * self.area <= safety * self.breaking_threshold)[0]
        return int(ok[-1])


def hs_drift(params: HunterSaxtonParams, path: BrownianPath) -> CoefficientSet:
    """Hunter--Saxton ramp drift bound to ``path`` via ``params``.

    u(t, .) rises linearly from 0 at the origin to the (negative) plateau at
    the moving ramp edge, stays flat beyond it, and is identically zero for
    x < 0 and from the blow-up node on.  The matching one-sided bound K with
    zero additive constant is attached.
    """
    if params.path is not path:
        raise ConfigurationError("params cache was built on a different path")
    inv_dt = 1.0 / path.grid.dt
    k_star = params.blowup_index
    g = params.gradient_factor.tolist()
    edge = params.ramp_edge.tolist()
    dead = k_star if k_star is not None else len(g)

    def drift(t, x):
        k = int(t * inv_dt + 0.5)
        if k >= dead:
            return 0.0
        if x < 0.0:
            return 0.0
        gk = g[k]
        e = edge[k]
        return x * gk if x < e else e * gk

    def gradient(t, x):
        k = int(t * inv_dt + 0.5)
        if k >= dead:
            return 0.0
        return g[k] if 0.0 <= x < edge[k] else 0.0

    bound = oleinik_profile(path, C=0.0, L=abs(params.noise_slope)).tolist()

    def oleinik(t):
        k = int(t * inv_dt + 0.5)
        return bound[k]

    return CoefficientSet(
        name="hunter_saxton",
        drift=drift,
        gradient=gradient,
        oleinik=oleinik,
        left_anchor=0.0,
        # gradient < 0 before blow-up and 0 after, so any cap R > 0 is inert
        closed_form_truncation=lambda R: (drift, gradient),
    )


def expanding_fan_drift(path: BrownianPath, L: float = 0.0) -> CoefficientSet:
    """Mirror ramp with gradient +K(t) on [0, 1): an expanding fan.

    Its one-sided Lipschitz (monotonicity) constant is 2K(t) ~ 4/t near
    t = 0, which is not time-integrable; evaluators return 0 at the t = 0
    node where K is undefined.
    """
    bound = oleinik_profile(path, C=0.0, L=L)
    inv_dt = 1.0 / path.grid.dt
    vals = bound.tolist()

    def drift(t, x):
        k = int(t * inv_dt + 0.5)
        if k == 0:
            return 0.0
        return min(max(x, 0.0), 1.0) * vals[k]

    def gradient(t, x):
        k = int(t * inv_dt + 0.5)
        if k == 0:
            return 0.0
        return vals[k] if 0.0 <= x < 1.0 else 0.0

    def oleinik(t):
        return vals[int(t * inv_dt + 0.5)]

    return CoefficientSet(
        name="expanding_fan",
        drift=drift,
        gradient=gradient,
        oleinik=oleinik,
        left_anchor=0.0,
    )


# ---------------------------------------------------------------------------
# the Oleinik bound process


def oleinik_profile(path: BrownianPath, C: float, L: float) -> np.ndarray:
    """K at every grid node; node 0 is +inf (the bound diverges at t = 0)."""
    if C < 0.0 or L < 0.0:
        raise ConfigurationError("oleinik constants must satisfy C >= 0, L >= 0")
    weight = np.exp(-L * path.values)
    integral = cumulative_trapezoid(weight, dx=path.grid.dt, initial=0.0)
    out = np.empty_like(integral)
    out[0] = np.inf
    out[1:] = C + weight[1:] / (0.5 * integral[1:])
    return out


def oleinik_K(path: BrownianPath, C: float, L: float, t: float) -> float:
    """One-sided bound C + exp(-L W(t)) / (0.5 * integral_0^t exp(-L W)).

    The time integral is the trapezoid rule on the path's grid.  At off-grid
    times both W and the cached integral are interpolated linearly.  t = 0 is
    a domain error: the bound diverges there.
    """
    if t <= 0.0:
        raise DomainError("the one-sided bound diverges at t = 0")
    grid = path.grid
    if t > grid.horizon * (1.0 + 1e-12):
        raise DomainError(f"t={t} beyond grid horizon {grid.horizon}")
    if C < 0.0 or L < 0.0:
        raise ConfigurationError("oleinik constants must satisfy C >= 0, L >= 0")
    weight = np.exp(-L * path.values)
    integral = cumulative_trapezoid(weight, dx=grid.dt, initial=0.0)
    pos = t / grid.dt
    k = int(pos)
    frac = pos - k
    if k >= grid.n:
        k, frac = grid.n, 0.0
    if frac == 0.0:
        w_t, i_t = path.values[k], integral[k]
    else:
        w_t = (1.0 - frac) * path.values[k] + frac * path.values[k + 1]
        i_t = (1.0 - frac) * integral[k] + frac * integral[k + 1]
    return C + math.exp(-L * w_t) / (0.5 * i_t)


# ---------------------------------------------------------------------------
# assumption self-checks


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    worst: Optional[float]
    witness: Optional[dict]
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "worst": self.worst,
            "witness": self.witness,
            "note": self.note,
        }


@dataclass(frozen=True)
class AssumptionReport:
    items: tuple

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def item(self, name: str) -> AssumptionCheck:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "items": [i.to_dict() for i in self.items]}


CoefficientSource = Union[CoefficientSet, Callable[[BrownianPath], CoefficientSet]]


def _bind(coeffs: CoefficientSource, path: BrownianPath) -> CoefficientSet:
    return coeffs(path) if callable(coeffs) else coeffs


def check_assumptions(
    coeffs: CoefficientSource,
    ensemble: PathEnsemble,
    probe_xs: Sequence[float],
    probe_times: Optional[Sequence[float]] = None,
    tol: float = 1e-9,
) -> AssumptionReport:
    """Scan the coefficient contracts over an ensemble and a probe grid.

    Report-only. Items:

    * ``one_sided_gradient``  max of q(t,x) - K(t) (flagged when > tol),
    * ``noise_lipschitz``     max difference-quotient excess over Lambda(t)
      for both sigma and (sigma^2)',
    * ``origin_moments``      sigma(t,0) and (sigma^2)'(t,0) stay finite.

    ``coeffs`` may be a bound set (deterministic fields) or a factory
    ``path -> CoefficientSet`` for path-dependent fields.
    """
    xs = [float(x) for x in probe_xs]
    if len(xs) < 2:
        raise ConfigurationError("need at least two probe points")
    grid = ensemble.grid
    if probe_times is None:
        stride = max(1, grid.n // 32)
        probe_times = [k * grid.dt for k in range(1, grid.n + 1, stride)]
    ts = [float(t) for t in probe_times]

    g_worst, g_wit = -math.inf, None
    l_worst, l_wit = -math.inf, None
    o_worst, o_wit = 0.0, None
    o_finite = True
    have_bound = have_lip = False

    for i in range(len(ensemble)):
        path = ensemble.path(i)
        cs = _bind(coeffs, path)
        for t in ts:
            if cs.oleinik is not None and cs.gradient is not None:
                have_bound = True
                bound = cs.oleinik(t)
                for x in xs:
                    excess = cs.gradient(t, x) - bound
                    if excess > g_worst:
                        g_worst, g_wit = excess, {"t": t, "x": x, "path": i}
            if cs.lipschitz is not None:
                have_lip = True
                lam = cs.lipschitz(t)
                for x0, x1 in zip(xs[:-1], xs[1:]):
                    h = x1 - x0
                    if h <= 0.0:
                        raise ConfigurationError("probe points must increase")
                    for f in (cs.noise, cs.noise_sq_deriv):
                        excess = abs(f(t, x1) - f(t, x0)) / h - lam
                        if excess > l_worst:
                            l_worst, l_wit = excess, {"t": t, "x": x0, "path": i}
            for f in (cs.noise, cs.noise_sq_deriv):
                v = f(t, 0.0)
                if not math.isfinite(v):
                    o_finite = False
                    o_wit = {"t": t, "x": 0.0, "path": i}
                elif abs(v) > o_worst:
                    o_worst = abs(v)

    items = []
    if have_bound:
        items.append(
            AssumptionCheck(
                "one_sided_gradient",
                g_worst <= tol,
                g_worst,
                g_wit if g_worst > tol else None,
            )
        )
    else:
        items.append(
            AssumptionCheck(
                "one_sided_gradient", True, None, None, note="no bound provided"
            )
        )
    if have_lip:
        items.append(
            AssumptionCheck(
                "noise_lipschitz",
                l_worst <= tol,
                l_worst,
                l_wit if l_worst > tol else None,
            )
        )
    else:
        items.append(
            AssumptionCheck(
                "noise_lipschitz", True, None, None, note="no Lipschitz process"
            )
        )
    items.append(
        AssumptionCheck(
            "origin_moments",
            o_finite,
            o_worst if o_finite else math.inf,
            o_wit,
        )
    )
    return AssumptionReport(items=tuple(items))
