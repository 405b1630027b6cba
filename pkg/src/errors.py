"""
Exception types shared across the pipeline.
"""
from typing import List, Optional


class VeridictError(Exception):
    """Base class for all pipeline errors."""
    pass


class ShapeError(VeridictError, ValueError):
    """Raised when array dimensions do not line up."""
    pass


class ConfigError(VeridictError, ValueError):
    """Raised for invalid configuration or hyperparameters."""
    pass


class ValidationError(VeridictError, ValueError):
    """Raised when input data violates a documented precondition."""
    pass


class ManifestError(ValidationError):
    """Manifest validation failure with an itemized list of problems."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class DataFormatError(VeridictError, ValueError):
    """Raised for malformed binary or tabular input."""

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class DivergenceError(VeridictError, RuntimeError):
    """Raised when training produces a non-finite loss."""

    def __init__(self, epoch: int, lr: float, message: str = "loss became non-finite"):
        self.epoch = epoch
        self.lr = lr
        super().__init__(f"{message} at epoch {epoch} (lr={lr})")


class ContractError(VeridictError, RuntimeError):
    """Raised when an API contract between calls is broken."""
    pass


class FoldError(VeridictError, RuntimeError):
    """Wraps a failure raised while training or scoring one fold."""

    def __init__(self, model: str, fold: int, cause: Exception):
        self.model = model
        self.fold = fold
        self.cause = cause
        super().__init__(f"{model} failed on fold {fold}: {cause}")
