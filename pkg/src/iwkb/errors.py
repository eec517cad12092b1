"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes; see ``iwkb.cli``.
"""


class IWKBError(Exception):
    """Base class for all package errors."""


class ConfigError(IWKBError):
    """Malformed configuration input (bad key, bad value, bad file)."""


class DomainError(IWKBError):
    """Evaluation outside a valid domain or invalid physical parameters."""


class SingularityError(DomainError):
    """A denominator vanished at a reported coordinate."""


class ExtrapolationError(DomainError):
    """Requested point lies outside a tabulated range."""


class TurningPointError(DomainError):
    """An operation that requires E > V hit or crossed a turning point."""


class ForbiddenRegionError(TurningPointError):
    """A classically forbidden region lies inside the requested domain."""

    def __init__(self, message, segments=()):
        super().__init__(message)
        self.segments = tuple(segments)


class AmplitudeDomainError(DomainError):
    """2k - c^2 < 0: the split amplitudes are not defined at this point."""


class NormalizationError(DomainError):
    """The normalization h = C^2 + D^2 is not positive."""


class MatchingError(IWKBError):
    """The far-field amplitude matching has no acceptable root."""

    def __init__(self, message, discriminant=None):
        super().__init__(message)
        self.discriminant = discriminant


class ConvergenceError(IWKBError):
    """An iterative refinement failed to reach its tolerance."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = tuple(history)


class FitError(IWKBError):
    """A piecewise fit is degenerate or failed."""
