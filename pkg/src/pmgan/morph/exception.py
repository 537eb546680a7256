from __future__ import annotations

from pmgan.exception import PMGANError


class MorphError(PMGANError):
    """Base exception for grid and morph-map errors."""


class MorphShapeError(MorphError, ValueError):
    """Raised when grids, maps or sources have incompatible sizes."""


class MorphFileError(MorphError):
    """Raised when a morph-map file or its sidecar is malformed."""
