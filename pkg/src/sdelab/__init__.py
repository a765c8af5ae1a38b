"""Monte Carlo laboratory for one-dimensional SDEs of the form

    dX = u(omega, t, X) dt + (1/4)(sigma^2)'(omega, t, X) dt
       + sigma(omega, t, X) dW,

with rough random drift u under a one-sided gradient bound and linear
(possibly vanishing) noise.  The package provides reproducible Brownian
drivers, the built-in drift/noise families, an Euler solver with exact
oracles, ensemble estimators (including the L^(1/2) Cauchy metric), a
stochastic Gronwall verifier, and a config-driven experiment harness.
"""

from .coefficients import (
    AssumptionReport,
    CoefficientSet,
    HunterSaxtonParams,
    SpikeDriftParams,
    attach_noise,
    check_assumptions,
    expanding_fan_drift,
    hs_drift,
    linear_noise,
    oleinik_K,
    oleinik_profile,
    spike_drift,
    theta_R,
    truncate_drift,
    zero_drift,
)
from .errors import (
    BlowUpError,
    ConfigurationError,
    DomainError,
    HeavyTailError,
    HeavyTailWarning,
    PairingError,
    SdeLabError,
    SolverError,
    UnsupportedCoefficientError,
)
from .estimators import (
    EstimateWithCI,
    SlopeFit,
    cauchy_metric,
    exp_moment_I,
    loglog_slope,
    short_time_gap,
    sup_moment,
)
from .gronwall import (
    GronwallInstance,
    GronwallParams,
    VerifyReport,
    cpr,
    deterministic_instance,
    gronwall_lhs,
    gronwall_rhs,
    gronwall_verify,
    simulate_instance,
)
from .paths import (
    BrownianPath,
    PathEnsemble,
    StreamId,
    TimeGrid,
    refine,
    running_max,
    sample_path,
)
from .solver import (
    KrylovReport,
    SamplePath,
    SolveConfig,
    euler_solve,
    hs_exact_characteristic,
    krylov_check,
    verhulst_blowup_time,
    verhulst_exact,
)

__version__ = "0.1.0"
