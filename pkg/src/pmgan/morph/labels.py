from __future__ import annotations

import numpy as np
from attrs import field, frozen
from numpy.typing import ArrayLike

from pmgan.numeric import Tensor
from pmgan.utils.types import IntArray

from .exception import MorphShapeError
from .field import MorphMap
from .grid import SamplingGrid, identity_grid
from .resize import resize_field
from .sample import bilinear_sample


def _to_labels(value: ArrayLike) -> IntArray:
    arr = np.array(value, dtype=np.int64, copy=True)
    if arr.ndim != 2:
        raise MorphShapeError(f"Label map must be (H, W), got {arr.shape}")
    arr.setflags(write=False)
    return arr


@frozen(eq=False)
class LabelMap:
    """Integer class id per pixel; 0 is background."""

    labels: IntArray = field(converter=_to_labels)
    num_classes: int = field()

    @num_classes.validator
    def _check_ids(self, _: object, value: int) -> None:
        if value < 1:
            raise MorphShapeError(f"num_classes must be positive, got {value}")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= value):
            raise MorphShapeError(f"Label ids must lie in [0, {value})")

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelMap):
            return NotImplemented
        return self.num_classes == other.num_classes and np.array_equal(self.labels, other.labels)

    def __hash__(self) -> int:
        return hash((self.num_classes, self.labels.tobytes()))


def _single_map(morph: MorphMap) -> MorphMap:
    if morph.batched:
        if morph.values.shape[0] != 1:
            raise MorphShapeError("warp_labels needs a single map, got a batch")
        return morph.select(0)
    return morph


def warp_labels(labels: LabelMap, morph: MorphMap) -> LabelMap:
    """Warp a label map by nearest-neighbour gathering.

    The map is resized to the label resolution and added to the identity grid;
    each output pixel takes the label at the rounded sample point. Samples
    outside the image become background.
    """

    morph = _single_map(morph)
    height, width = labels.height, labels.width
    offset = resize_field(morph.values, height, width).data.astype(np.float64)
    # relative to the identity grid, so a zero map lands exactly on each pixel
    px = np.arange(width)[None, :] + offset[..., 0] * ((width - 1) / 2)
    py = np.arange(height)[:, None] + offset[..., 1] * ((height - 1) / 2)
    xi = np.floor(px + 0.5).astype(np.int64)
    yi = np.floor(py + 0.5).astype(np.int64)
    inside = (xi >= 0) & (xi < width) & (yi >= 0) & (yi < height)
    gathered = labels.labels[np.clip(yi, 0, height - 1), np.clip(xi, 0, width - 1)]
    return LabelMap(np.where(inside, gathered, 0), labels.num_classes)


def segment_onehot_warp(labels: LabelMap, morph: MorphMap) -> LabelMap:
    """Warp one-hot label channels bilinearly, then take the argmax per pixel."""

    morph = _single_map(morph)
    height, width = labels.height, labels.width
    onehot = (labels.labels[None] == np.arange(labels.num_classes)[:, None, None]).astype(np.float64)
    offset = resize_field(morph.values, height, width)
    grid = SamplingGrid(identity_grid(height, width).values + offset)
    warped = bilinear_sample(Tensor(onehot), grid).data
    return LabelMap(np.argmax(warped, axis=0), labels.num_classes)
