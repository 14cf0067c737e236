"""Exception hierarchy shared by every module."""


class FinslerError(Exception):
    """Base class for all package errors."""


class DomainError(FinslerError, ValueError):
    """A point or vector lies outside the region where an operation is defined."""


class AdmissibilityError(FinslerError, ValueError):
    """``|beta/alpha|`` reached the admissibility radius of the chosen phi."""


class ConfigError(FinslerError, ValueError):
    """A metric configuration or finite-space document is malformed.

    ``field`` names the offending entry (dotted path) when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class NotPositiveDefiniteError(FinslerError, ArithmeticError):
    """The fundamental tensor lost positive-definiteness."""

    def __init__(self, message, eigenvalue):
        super().__init__(f"{message} (min eigenvalue {eigenvalue:.3e})")
        self.eigenvalue = eigenvalue
