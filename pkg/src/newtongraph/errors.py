"""Exception types shared across the package."""


class NewtonGraphError(Exception):
    """Base class for all errors raised by this package."""


class InvalidSpecError(NewtonGraphError, ValueError):
    pass


class DegenerateMapError(NewtonGraphError, ValueError):
    pass


class NumericalError(NewtonGraphError, ArithmeticError):
    """A numerical kernel failed; ``details`` carries residuals or last estimates."""

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class IndeterminacyError(NumericalError):
    pass


class NotNewtonMapError(NewtonGraphError):
    def __init__(self, message, multiplier=None, location=None):
        super().__init__(message)
        self.multiplier = multiplier
        self.location = location


class TracingError(NumericalError):
    pass


class LiftAmbiguityError(NumericalError):
    pass


class PullbackError(NumericalError):
    pass


class MalformedGraphError(NewtonGraphError, ValueError):
    pass
