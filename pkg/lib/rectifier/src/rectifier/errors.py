"""
Error Types

Every failure raised by the library derives from RectifierError, so callers
can catch the whole family at once. The concrete classes also derive from
the closest builtin (ValueError, OSError, ...) which keeps plain
``except ValueError`` call sites working.

The CLI maps these onto exit codes (see rectification.cli).
"""

from typing import Optional


class RectifierError(Exception):
    """Base class for all library errors."""


class DimensionError(RectifierError, ValueError):
    """Tensor or image extents do not agree."""


class ArgumentError(RectifierError, ValueError):
    """An argument is outside its documented domain."""


class ConfigError(RectifierError, ValueError):
    """A configuration value violates a model invariant."""


class ContractError(RectifierError, ValueError):
    """An input violates a precondition stated by the operation."""


class TrainingError(RectifierError, ArithmeticError):
    """Non-finite loss or gradient during training."""

    def __init__(self, message: str, parameter: Optional[str] = None):
        super().__init__(message)
        self.parameter = parameter


class PipelineError(RectifierError, RuntimeError):
    """The rectification pipeline cannot produce a result for this input."""


class CheckpointError(RectifierError, ValueError):
    """A checkpoint is malformed or does not match the model."""

    def __init__(self, message: str, tensor: Optional[str] = None):
        super().__init__(message)
        self.tensor = tensor


class DataError(RectifierError, OSError):
    """Dataset or image files are missing, unreadable or unwritable."""


class WarpError(RectifierError, RuntimeError):
    """A synthetic warp could not be made diffeomorphic."""
