from __future__ import annotations

from pmgan.exception import PMGANError


class BenchError(PMGANError):
    """Base exception for metrics and verification harnesses."""


class MetricInputError(BenchError, ValueError):
    """Raised when metric inputs disagree in shape or are too few."""
