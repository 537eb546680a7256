from __future__ import annotations

from pmgan.exception import PMGANError


class NumericError(PMGANError):
    """Base exception for tensor and autodiff errors."""


class NonFiniteError(NumericError):
    """Raised when an operation produces NaN or Inf."""

    def __init__(self, op: str, *args: object):
        super().__init__(*args)
        self.op = op


class FiniteDifferenceError(NonFiniteError):
    """Raised when a finite-difference evaluation gives to a non-finite value."""


class TapeError(NumericError):
    """Raised on misuse of the gradient tape (non-scalar output, untracked value)."""


class ShapeError(NumericError, ValueError):
    """Raised when operand shapes are incompatible."""


class TensorFormatError(NumericError):
    """Raised when a PMT1 tensor blob is malformed."""
