from __future__ import annotations

from pmgan.numeric import Tensor, ops
from pmgan.numeric.ops import LEAKY_SLOPE
from pmgan.utils.types import ResampleMode


def leaky_relu(x: Tensor, slope: float = LEAKY_SLOPE) -> Tensor:
    return ops.leaky_relu(x, slope)


def tanh(x: Tensor) -> Tensor:
    return ops.tanh(x)


def upsample(x: Tensor, mode: ResampleMode = "bilinear", factor: int = 2) -> Tensor:
    """Upsample the last two axes; bilinear is corner-aligned, nearest duplicates."""
    return ops.upsample(x, factor, mode)
