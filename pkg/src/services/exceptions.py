"""Exception hierarchy shared by the simulator services."""

from typing import Optional


class SimulatorError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigError(SimulatorError, ValueError):
    """Invalid configuration value, reported with the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")

    def __reduce__(self):
        return type(self), (self.field, self.message)


class DimensionError(SimulatorError, ValueError):
    """Operands whose dimensions do not fit together."""


class NumericalError(SimulatorError):
    """Integrator invariant violated beyond tolerance."""

    def __init__(self, message: str, delay_s: Optional[float] = None):
        self.delay_s = delay_s
        self.reason = message
        if delay_s is not None:
            message = f"{message} (delay {delay_s:.6g} s)"
        super().__init__(message)

    # Worker processes send exceptions back pickled
    def __reduce__(self):
        return type(self), (self.reason, self.delay_s)


class FitError(SimulatorError):
    """Least-squares fit that did not converge or is degenerate."""


class CalibrationError(SimulatorError):
    """A calibration pipeline step failed."""

    def __init__(self, step: str, message: str):
        self.step = step
        self.reason = message
        super().__init__(f"calibration step '{step}' failed: {message}")

    def __reduce__(self):
        return type(self), (self.step, self.reason)
