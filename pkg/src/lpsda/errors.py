"""Exception hierarchy shared across the package."""


class LPSDAError(Exception):
    """Base class for all package errors."""


class ConfigError(LPSDAError, ValueError):
    """Invalid or inadmissible configuration."""


class OutOfRangeError(LPSDAError, ValueError):
    """A query or parameter lies outside its admissible interval."""


class DomainError(LPSDAError, ValueError):
    """Input outside the mathematical domain of an operation."""


class NonPeriodicPotentialError(DomainError):
    """A field with non-zero mean has no periodic Cole-Hopf potential."""


class UnsupportedEquationError(ConfigError):
    """The equation cannot be handled by the requested route."""


class InadmissibleGeneratorError(ConfigError):
    """A symmetry generator is not a symmetry of the target equation."""


class IncompatibleTrajectoriesError(LPSDAError, ValueError):
    """Two trajectories cannot be combined (grid, horizon or viscosity mismatch)."""


class InsufficientHorizonError(OutOfRangeError):
    """A resampled time window does not fit inside the stored horizon."""


class DegenerateNormalizationError(LPSDAError, ZeroDivisionError):
    """A normalised metric would divide by an all-zero reference frame."""


class SolverError(LPSDAError, RuntimeError):
    """Time integration failed.

    Attributes
    ----------
    time : float
        Last time at which the state was valid.
    """

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (last valid t={time:.6g})")
        self.time = time


class StepSizeUnderflowError(SolverError):
    """Adaptive step size fell below the admissible minimum."""


class DivergenceError(SolverError):
    """The state became non-finite."""
