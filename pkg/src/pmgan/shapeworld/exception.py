from __future__ import annotations

from pmgan.exception import PMGANError


class ShapeworldError(PMGANError):
    """Base exception for synthetic dataset errors."""


class DegenerateSpecError(ShapeworldError, ValueError):
    """Raised when a domain spec cannot be rendered (bad palette, non-invertible warp, ...)."""


class ImageFormatError(ShapeworldError):
    """Raised when a PPM/PGM file is malformed."""


class DatasetError(ShapeworldError):
    """Raised when a dataset directory or manifest is missing, malformed or of another schema."""
