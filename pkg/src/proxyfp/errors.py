"""Exception types shared across the pipeline."""


class PipelineError(Exception):
    """Base class for all domain errors raised by this package."""


class DimensionError(PipelineError, ValueError):
    """Array shapes or lengths do not satisfy an operation's contract."""


class DomainError(PipelineError, ValueError):
    """An argument is outside its documented domain (bad class index, etc.)."""


class ConfigurationError(PipelineError):
    """Pipeline configuration is inconsistent or required models are missing."""


class TrainingError(PipelineError):
    """Training diverged or produced non-finite values."""

    def __init__(self, message: str, layer_index: int | None = None):
        super().__init__(message)
        self.layer_index = layer_index


class UserConflictError(PipelineError):
    """A user id is already enrolled."""


class UserNotFoundError(PipelineError):
    """No enrollment record exists for the requested user id."""


class StaleTokenError(PipelineError):
    """Token key epoch does not match the current enrollment record."""


class DegenerateInputError(PipelineError, ValueError):
    """Input data carries no usable signal (e.g. zero variance for PCA)."""
