"""Exception hierarchy shared across the package."""


class HipvpError(Exception):
    """Base class for all package errors."""


class ConfigurationError(HipvpError, ValueError):
    """Invalid tables, schedules, options or configuration files."""


class DomainError(HipvpError, ValueError):
    """Argument outside the admissible domain of a material function."""


class SingularDerivativeError(HipvpError, ArithmeticError):
    """Derivatives requested at a state where the equivalent stress vanishes."""


class YieldExtractionError(HipvpError, ValueError):
    """A stress-strain curve never reaches the requested plastic offset."""


class IntegrationError(HipvpError, RuntimeError):
    """Time integration failed.

    Attributes
    ----------
    state : PointState or None
        Last accepted state before the failure.
    time : float or None
        Simulation time of the failing step.
    """

    def __init__(self, message, state=None, time=None, trajectory=None):
        super().__init__(message)
        self.state = state
        self.time = time
        self.trajectory = trajectory


class ReturnMapError(IntegrationError):
    """Cam-Clay return mapping did not converge; the step must be rejected."""


class CalibrationError(HipvpError, RuntimeError):
    """A calibration step failed.

    ``partial`` carries whatever was computed before the failure (a
    :class:`~hipvp.calibration.CalibrationResult` for pipeline failures,
    the best-so-far parameters for single-step failures).
    """

    def __init__(self, message, step=None, partial=None):
        super().__init__(message)
        self.step = step
        self.partial = partial
