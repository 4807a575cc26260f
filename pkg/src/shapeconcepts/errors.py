"""Exception types shared across the pipeline."""


class ShapeConceptsError(Exception):
    """Base class for all pipeline errors."""


class InvalidParameterError(ShapeConceptsError, ValueError):
    """A parameter or input violates a documented precondition."""


class InsufficientDataError(ShapeConceptsError, ValueError):
    """Not enough data to perform the operation (empty corpus, too few
    points/samples, a category with a single sample, ...)."""


class DimensionMismatchError(ShapeConceptsError, ValueError):
    """Operands have incompatible dimensions."""


class ModelStateError(ShapeConceptsError, RuntimeError):
    """A model is untrained, corrupt, or stale relative to its inputs."""


class MissingLabelError(ShapeConceptsError, KeyError):
    """A labeled operation met an unlabeled sample."""


class StageDependencyError(ShapeConceptsError, FileNotFoundError):
    """A pipeline stage is missing an upstream artifact."""


class ConfigError(ShapeConceptsError, ValueError):
    """A configuration file or value failed validation."""
