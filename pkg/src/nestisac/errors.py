"""Exception types shared across the package.

The CLI maps :class:`ConfigError` (and other ``ValueError`` subclasses raised
while validating inputs) to exit code 2 and :class:`NumericalError` to exit
code 3.
"""


class ConfigError(ValueError):
    """Invalid configuration or parameter combination."""


class InvalidConfigurationError(ConfigError):
    """Array parameters that do not describe any geometry."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class RegimeError(ValueError):
    """An operation was requested outside the beam-pattern regime it belongs to."""


class NumericalError(RuntimeError):
    """A numerical procedure could not produce a result."""


class DegeneratePatternError(NumericalError):
    """No local minimum of the beam pattern was found on (0, 2]."""


class UnderResolutionError(NumericalError):
    """The DoA estimator found fewer spectral peaks than requested sources.

    Attributes:
        found: angles (radians) of the peaks that were found.
        requested: number of sources asked for.
    """

    def __init__(self, message, found=(), requested=0):
        super().__init__(message)
        self.found = list(found)
        self.requested = requested
