"""Proxy fingerprint pipeline.

Generates protected "proxy" fingerprint templates from originals: a trained
encoder extracts a latent vector, a user key salts it, a per-class
orthonormal matrix projects it, and a trained decoder renders a new
natural-looking fingerprint used in place of the original for enrollment
and matching.
"""

from .config import N_CLASSES, PipelineConfig, derive_seed
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    DimensionError,
    DomainError,
    PipelineError,
    StaleTokenError,
    TrainingError,
    UserConflictError,
    UserNotFoundError,
)

__all__ = [
    "N_CLASSES",
    "PipelineConfig",
    "derive_seed",
    "PipelineError",
    "DimensionError",
    "DomainError",
    "ConfigurationError",
    "TrainingError",
    "UserConflictError",
    "UserNotFoundError",
    "StaleTokenError",
    "DegenerateInputError",
]

__version__ = "0.1.0"
