"""Exception types raised across the package."""


class CSRemoteError(Exception):
    """Base class for all package errors."""


class DimensionError(CSRemoteError, ValueError):
    """Array shapes do not agree."""


class DomainError(CSRemoteError, ValueError):
    """An argument lies outside the domain of the operation."""


class NotApplicableError(CSRemoteError):
    """The hypothesis of a bound does not hold (e.g. delta_2S >= sqrt(2) - 1)."""


class EnumerationGuardError(CSRemoteError):
    """Exhaustive enumeration would exceed the configured support budget."""
