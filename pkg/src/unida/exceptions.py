"""Exception types shared across the toolkit."""


class UnidaError(Exception):
    """Base class for all toolkit errors."""


class FormatError(UnidaError):
    """A file does not follow the embedding-container or metadata format."""


class IntegrityError(UnidaError):
    """Data violates a structural invariant (label range, NaN, alignment)."""


class ConfigError(UnidaError):
    """An experiment or operation was configured with inconsistent values."""


class ShapeError(UnidaError):
    """Array dimensions do not line up."""


class DomainError(UnidaError):
    """A numeric argument is outside the mathematical domain of an operation."""
