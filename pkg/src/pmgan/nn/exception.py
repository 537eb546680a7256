from __future__ import annotations

from pmgan.exception import PMGANError


class LayerError(PMGANError, ValueError):
    """Raised when a layer receives inputs of the wrong shape."""


class OptimizerError(PMGANError, ValueError):
    """Raised when parameters, gradients and optimizer state disagree."""


class CheckpointError(PMGANError):
    """Base exception for checkpoint directory errors."""


class CheckpointFormatError(CheckpointError):
    """Raised when a checkpoint manifest or tensor file is malformed or missing."""


class CheckpointVersionError(CheckpointError):
    """Raised when a checkpoint was written by an incompatible format version."""

    def __init__(self, found: str, supported: str, *args: object):
        super().__init__(f"Checkpoint version {found} is incompatible with {supported}", *args)
        self.found = found
        self.supported = supported
