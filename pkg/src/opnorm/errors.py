"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical-precondition failures with 3 and resource caps with 4.
"""


class OpNormError(Exception):
    """Base class for every error raised by this package."""


class DomainError(OpNormError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NotSummableError(DomainError):
    """The eigenvalue sequence is not summable (e.g. polynomial decay with alpha <= 1)."""


class UnsupportedOperationError(OpNormError, TypeError):
    """The eigensystem / operator pairing does not support the requested operation."""


class PreconditionError(OpNormError, ValueError):
    """A numerical precondition of a bound or oracle does not hold."""


class InequalityNotGuaranteedError(PreconditionError):
    """The sufficient condition for the quadratic inequality fails."""


class ResourceError(OpNormError, RuntimeError):
    """A configured size or compute cap would be exceeded."""


class ConfigError(OpNormError, ValueError):
    """An experiment configuration document is malformed."""
