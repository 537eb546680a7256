from __future__ import annotations

from collections.abc import Sequence

from .exception import TrainDataError


def domain_loss_weights(sizes: Sequence[int]) -> tuple[float, ...]:
    """Per-domain loss weights `size_d / max(sizes)`; the largest domain gets exactly 1."""

    if not sizes:
        raise TrainDataError("No domain sizes given")
    if (smallest := min(sizes)) < 1:
        raise TrainDataError(f"Every domain needs at least one sample, got size {smallest}")
    largest = max(sizes)
    return tuple(size / largest for size in sizes)
