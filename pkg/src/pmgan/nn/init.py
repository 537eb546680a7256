from __future__ import annotations

import math

import numpy as np

from pmgan.numeric import Tensor
from pmgan.utils.types import Shape


def kaiming_normal(shape: Shape, fan_in: int, rng: np.random.Generator, gain: float = 1.0) -> Tensor:
    """N(0, 1) scaled by gain / sqrt(fan_in)."""
    return Tensor(rng.standard_normal(shape, dtype=np.float32) * np.float32(gain / math.sqrt(fan_in)))


def constant(shape: Shape, value: float = 0.0) -> Tensor:
    return Tensor(np.full(shape, value))
