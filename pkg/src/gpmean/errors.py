"""Exception types shared across the package.

Plain ``ValueError`` is used for invalid arguments and out-of-domain
inputs; the classes below mark conditions a caller may want to branch on
(the CLI maps ``ConfigError`` to exit code 2 and ``NumericalError`` to 3).
"""


class ConfigError(ValueError):
    """Malformed or inconsistent configuration input."""


class NumericalError(RuntimeError):
    """Base class for numerical failures that abort a computation."""


class NotPositiveSemidefiniteError(NumericalError):
    """Cholesky factorization failed even after jitter escalation."""


class SingularInformationError(NumericalError):
    """The discrete information matrix is numerically singular."""


class UnsupportedModelError(TypeError):
    """Operation requires model features (e.g. derivatives) that are absent."""
