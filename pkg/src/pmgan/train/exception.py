from __future__ import annotations

from pmgan.exception import PMGANError
from pmgan.numeric import NonFiniteError


class TrainError(PMGANError):
    """Base exception for training errors."""


class NonFiniteLossError(TrainError, NonFiniteError):
    """Raised when a training loss becomes NaN or infinite."""

    def __init__(self, step: int, term: str, value: float, *args: object):
        super().__init__(term, f"Non-finite {term} at step {step}: {value}", *args)
        self.step = step
        self.term = term
        self.value = value


class FreezeError(TrainError, ValueError):
    """Raised when more layers are frozen than a network has."""

    def __init__(self, network: str, requested: int, available: int, *args: object):
        super().__init__(f"Cannot freeze {requested} layers of the {network}; it has {available}", *args)
        self.network = network
        self.requested = requested
        self.available = available


class TrainDataError(TrainError, ValueError):
    """Raised when training data is missing, empty or inconsistent with the model."""
