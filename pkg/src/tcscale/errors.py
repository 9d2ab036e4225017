"""Exception hierarchy shared by every tcscale module."""


class TcscaleError(Exception):
    """Base class for all library errors."""


class InvalidArgument(TcscaleError, ValueError):
    pass


class DomainError(TcscaleError, ValueError):
    """A value lies outside the domain of the operation (e.g. log of a non-positive)."""


class InsufficientData(TcscaleError, ValueError):
    pass


class SingularFit(TcscaleError, ValueError):
    """Regression design matrix is rank deficient (all x identical)."""


class EmptyInput(TcscaleError, ValueError):
    pass


class NotFound(TcscaleError, KeyError):
    pass


class UnfittedProfile(TcscaleError, ValueError):
    """A hardware profile needs a throughput fit to answer the query."""
