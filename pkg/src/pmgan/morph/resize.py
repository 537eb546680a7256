from __future__ import annotations

from pmgan.numeric import Tensor, ops

from .exception import MorphShapeError
from .field import MorphMap
from .grid import SamplingGrid, identity_grid


def resize_field(values: Tensor, height: int, width: int) -> Tensor:
    """Corner-aligned bilinear resize of a (..., H, W, 2) field."""

    if values.shape[-3:-1] == (height, width):
        return values
    lead = tuple(range(values.ndim - 3))
    channels_first = ops.transpose(values, (*lead, values.ndim - 1, values.ndim - 3, values.ndim - 2))
    resized = ops.resize(channels_first, (height, width))
    return ops.transpose(resized, (*lead, values.ndim - 2, values.ndim - 1, values.ndim - 3))


def resize_grid[F: (SamplingGrid, MorphMap)](grid: F, height: int, width: int) -> F:
    """Bilinearly resize a grid or map to (height, width) with corners aligned.

    Grids are resized as identity plus resized offset, so an identity grid
    maps to the target identity grid exactly.
    """

    if height < 2 or width < 2:
        raise MorphShapeError(f"Target dims must be >= 2, got ({height}, {width})")
    match grid:
        case MorphMap():
            return MorphMap(resize_field(grid.values, height, width), grid.eta)
        case SamplingGrid():
            if (grid.height, grid.width) == (height, width):
                return grid
            source = identity_grid(grid.height, grid.width).values
            target = identity_grid(height, width).values
            offset = resize_field(ops.sub(grid.values, source), height, width)
            return SamplingGrid(ops.add(target, offset))
        case _:
            raise TypeError(f"Cannot resize {type(grid).__name__}")
