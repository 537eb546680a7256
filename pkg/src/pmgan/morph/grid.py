from __future__ import annotations

import numpy as np
from attrs import field, frozen

from pmgan.numeric import Tensor, ops

from .exception import MorphShapeError


def _check_field(_: object, __: object, values: Tensor) -> None:
    if values.ndim not in (3, 4) or values.shape[-1] != 2:
        raise MorphShapeError(f"Expected a (H, W, 2) or (N, H, W, 2) field, got {values.shape}")


@frozen
class SamplingGrid:
    """Absolute normalized sample coordinates, component order (x, y).

    Pixel (0, 0) of the identity grid holds (-1, -1) and pixel (H-1, W-1)
    holds (1, 1). Values may leave [-1, 1] once a morph map is added.
    """

    values: Tensor = field(validator=_check_field)

    @property
    def height(self) -> int:
        return self.values.shape[-3]

    @property
    def width(self) -> int:
        return self.values.shape[-2]


def identity_grid(height: int, width: int) -> SamplingGrid:
    if height < 2 or width < 2:
        raise MorphShapeError(f"identity_grid needs both dims >= 2, got ({height}, {width})")
    xs = ops.identity_axis(width)
    ys = ops.identity_axis(height)
    return SamplingGrid(Tensor(np.stack(np.broadcast_arrays(xs[None, :], ys[:, None]), axis=-1)))
