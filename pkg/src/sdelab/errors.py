"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical/runtime problems with 3, failed experiment assertions with 1.
"""


class SdeLabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SdeLabError):
    """Invalid grid, config file, sweep list, or parameter combination."""


class UnsupportedCoefficientError(SdeLabError):
    """A coefficient set lacks the evaluators an operation requires."""


class DomainError(SdeLabError):
    """An argument is outside the mathematical domain of an operation."""


class PairingError(SdeLabError):
    """Two ensembles that must share grid and replicate indexing do not."""


class SolverError(SdeLabError):
    """Non-finite coefficient evaluation during a solve.

    Carries the step time, the state at the failing step and the replicate
    id so a single sweep point can be re-derived.
    """

    def __init__(self, message, t, x, path_id):
        super().__init__(f"{message} (t={t!r}, x={x!r}, path_id={path_id!r})")
        self.t = t
        self.x = x
        self.path_id = path_id


class BlowUpError(SdeLabError):
    """A closed-form solution blew up before the requested time."""

    def __init__(self, message, crossing_time):
        super().__init__(f"{message} (crossing_time={crossing_time!r})")
        self.crossing_time = crossing_time


class HeavyTailError(SdeLabError):
    """An exponential-moment computation overflowed; use a smaller exponent."""


class HeavyTailWarning(UserWarning):
    """A Monte Carlo average of exponential moments looks heavy-tailed.

    Raised when the empirical coefficient of variation exceeds 2; the
    reported mean may be dominated by a few extreme replicates.
    """
