"""Exception hierarchy. CLI exit codes key off ``ConfigError`` vs ``NumericalError``."""


class DQHOError(Exception):
    """Base class for all package errors."""


class ConfigError(DQHOError, ValueError):
    """Invalid input parameters or configuration."""


class NumericalError(DQHOError, ArithmeticError):
    """A numerical procedure failed or left its accuracy envelope."""


class QuadratureError(NumericalError):
    def __init__(self, message, estimate=None):
        if estimate is not None:
            message = f"{message} (error estimate {estimate:.3g})"
        super().__init__(message)
        self.estimate = estimate


class PositivityError(ConfigError):
    """The coupled Hamiltonian is not bounded from below."""


class InvalidPreparationError(ConfigError):
    """A bath or oscillator state violates positivity or the uncertainty bound."""


class AliasingError(ConfigError):
    """Time step too coarse for the highest bath frequency."""


class PoleHitError(NumericalError):
    """F(z) was evaluated on top of one of its isolated real poles."""

    def __init__(self, omega):
        super().__init__(f"F(omega) evaluated at an isolated pole, omega={omega:.12g}")
        self.omega = omega


class RootFindingError(NumericalError):
    pass


class VolterraInstabilityError(NumericalError):
    def __init__(self, message, suggested_dt):
        super().__init__(f"{message}; try dt <= {suggested_dt:.3g}")
        self.suggested_dt = suggested_dt


class SingularRepresentationError(NumericalError):
    """Position-representation propagator requested where u(t) vanishes."""


class NotEquilibratingError(NumericalError):
    """Stationary quantities requested for parameters with undamped poles."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics
