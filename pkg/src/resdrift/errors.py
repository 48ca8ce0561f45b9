"""Exception hierarchy shared by all modules."""


class ResdriftError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ResdriftError, ValueError):
    """A point lies outside the domain where an object is defined."""


class CapabilityError(ResdriftError, ValueError):
    """A request exceeds a fixed capability, e.g. a derivative order cap."""


class SingularityError(ResdriftError, ZeroDivisionError):
    pass


class ConstructionError(ResdriftError, ValueError):
    """Hypotheses needed to build an object are not satisfied."""


class SearchError(ResdriftError, RuntimeError):
    pass


class NumericError(ResdriftError, ArithmeticError):
    """An iterative numeric procedure failed to converge."""


class IntegrationError(ResdriftError, RuntimeError):
    """The ODE integrator gave up. ``record`` holds the partial trajectory."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record
