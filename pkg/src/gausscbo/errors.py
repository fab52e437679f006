"""Exception types shared across the library."""


class GaussCboError(Exception):
    """Base class for all library errors."""


class InvalidInputError(GaussCboError):
    """Malformed argument: wrong shape, non-finite entries, bad parameter value."""


class NotPsdError(GaussCboError):
    """A matrix required to be positive semi-definite is not."""


class NotSpdError(GaussCboError):
    """A matrix required to be (strictly) positive definite is singular or indefinite."""


class NonConvergenceError(GaussCboError):
    """An iterative solver hit its iteration cap.

    Carries the last residual in ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InstabilityError(GaussCboError):
    """A time stepper could not produce a valid state even after step halving."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class ConfigError(GaussCboError):
    """Invalid run configuration or target file."""
