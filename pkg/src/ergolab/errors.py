"""Exception hierarchy shared by every module."""


class ErgolabError(Exception):
    """Base class for all library errors."""


class ConfigError(ErgolabError, ValueError):
    """Invalid input parameters or run configuration."""


class CapExceeded(ErgolabError):
    """A configured size or cost cap would be exceeded."""


class HorizonExhausted(CapExceeded):
    """A substitution fixed point cannot be expanded far enough."""


class NumericalFailure(ErgolabError, ArithmeticError):
    """NaN values, or a negative seminorm surrogate beyond tolerance."""


class NotApplicable(ErgolabError):
    """A formula was requested for a system lacking the required tags."""


class KroneckerNotExplicit(NotApplicable):
    pass


class CommutationError(ErgolabError):
    """Maps handed to a Folner average failed the commutation spot check."""
