from __future__ import annotations

from pmgan.numeric import Tensor, ops

from .exception import MorphShapeError
from .field import MorphMap
from .grid import SamplingGrid, identity_grid
from .resize import resize_field


def bilinear_sample(source: Tensor, grid: SamplingGrid) -> Tensor:
    """Bilinearly gather `source` features at the grid's coordinates.

    Accepts an unbatched (C, H, W) source with a (H, W, 2) grid, or a batched
    (N, C, H, W) source with a (N, H, W, 2) or shared (H, W, 2) grid. Out of
    range samples fade to zero.
    """

    batched = source.ndim == 4
    if source.ndim not in (3, 4):
        raise MorphShapeError(f"Source must be (C, H, W) or (N, C, H, W), got {source.shape}")
    if (grid.height, grid.width) != source.shape[-2:]:
        raise MorphShapeError(
            f"Grid {grid.height}x{grid.width} does not match source {source.shape[-2]}x{source.shape[-1]}"
        )
    src = source if batched else ops.reshape(source, (1, *source.shape))
    values = grid.values
    if values.ndim == 3:
        values = ops.broadcast_to(ops.reshape(values, (1, *values.shape)), (src.shape[0], *values.shape))
    out = ops.grid_sample(src, values)
    return out if batched else ops.reshape(out, source.shape)


def morph_features(source: Tensor, morph: MorphMap) -> Tensor:
    """Resize the map to the source's level, add the identity grid and sample."""

    height, width = source.shape[-2:]
    offset = resize_field(morph.values, height, width)
    grid = SamplingGrid(ops.add(identity_grid(height, width).values, offset))
    return bilinear_sample(source, grid)
