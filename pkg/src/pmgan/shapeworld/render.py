"""Rasterizing the canonical multi-part disk and its warped domain versions."""

from __future__ import annotations

import math

import numpy as np
from attrs import evolve, frozen

from pmgan.morph import LabelMap, MorphMap
from pmgan.numeric import Tensor, generator
from pmgan.utils.types import FloatArray, IntArray

from .exception import DegenerateSpecError
from .spec import DomainSpec, Warp

MIN_SIZE = 16
SUPERSAMPLE = 4


@frozen
class ShapeParams:
    """Pose of the canonical disk in normalized coordinates."""

    cx: float
    cy: float
    radius: float
    rotation: float
    """Angle of the first part boundary, radians."""


@frozen(eq=False)
class Sample:
    image: FloatArray
    """(3, H, W) in [0, 1]."""
    mask: LabelMap
    params: ShapeParams
    seed: int


def sample_params(seed: int) -> ShapeParams:
    """Pose drawn from the seed alone, so every domain poses the shape identically for one seed."""

    rng = generator(seed, "shape")
    cx, cy = rng.uniform(-0.2, 0.2, size=2)
    return ShapeParams(float(cx), float(cy), float(rng.uniform(0.35, 0.55)), float(rng.uniform(0.0, 2 * math.pi)))


def _labels_at(params: ShapeParams, parts: int, x: FloatArray, y: FloatArray) -> IntArray:
    """Part id of the canonical shape at normalized points; 0 outside the disk."""

    dx, dy = x - params.cx, y - params.cy
    inside = dx * dx + dy * dy <= params.radius**2
    angle = np.mod(np.arctan2(dy, dx) - params.rotation, 2 * math.pi)
    sector = np.minimum((angle / (2 * math.pi / parts)).astype(np.int64), parts - 1)
    return np.where(inside, sector + 1, 0)


def _pixel_axes(height: int, width: int) -> tuple[FloatArray, FloatArray]:
    """Normalized coordinates of pixel centres, shape (H, W)."""

    xs = np.arange(width) * (2.0 / (width - 1)) - 1.0
    ys = np.arange(height) * (2.0 / (height - 1)) - 1.0
    return np.meshgrid(xs, ys)


def _warped(spec: DomainSpec, x: FloatArray, y: FloatArray) -> tuple[FloatArray, FloatArray]:
    if spec.warp.is_identity:
        return x, y
    dx, dy = spec.warp.displacement(x, y)
    return x + dx, y + dy


def render_shape(spec: DomainSpec, params: ShapeParams, height: int, width: int) -> tuple[FloatArray, LabelMap]:
    """Render the (warped) shape: supersampled colour image and pixel-centre mask."""

    if height < MIN_SIZE or width < MIN_SIZE:
        raise DegenerateSpecError(f"Images must be at least {MIN_SIZE}x{MIN_SIZE}, got {height}x{width}")
    colours = np.array([spec.background, *spec.palette], dtype=np.float64)

    accum = np.zeros((height, width, 3), dtype=np.float64)
    x0, y0 = _pixel_axes(height, width)
    step_x, step_y = 2.0 / (width - 1), 2.0 / (height - 1)
    for i in range(SUPERSAMPLE):
        for j in range(SUPERSAMPLE):
            oy = ((i + 0.5) / SUPERSAMPLE - 0.5) * step_y
            ox = ((j + 0.5) / SUPERSAMPLE - 0.5) * step_x
            accum += colours[_labels_at(params, spec.parts, *_warped(spec, x0 + ox, y0 + oy))]
    image = (accum / SUPERSAMPLE**2).transpose(2, 0, 1)

    mask = LabelMap(_labels_at(params, spec.parts, *_warped(spec, x0, y0)), spec.num_classes)
    return image, mask


def canonical_render(spec: DomainSpec, params: ShapeParams, height: int, width: int) -> tuple[FloatArray, LabelMap]:
    """The unwarped shape with the domain's palette."""

    return render_shape(evolve(spec, warp=Warp()), params, height, width)


def gen_sample(spec: DomainSpec, seed: int, height: int, width: int) -> Sample:
    params = sample_params(seed)
    image, mask = render_shape(spec, params, height, width)
    return Sample(image, mask, params, seed)


def ground_truth_map(spec: DomainSpec, height: int, width: int, eta: float = 3.0) -> MorphMap:
    """The domain warp's displacement at every pixel centre, as a morph map.

    Sampling parent content with this map (backward sampling) yields the
    domain content; the identity warp gives the zero map.
    """

    x, y = _pixel_axes(height, width)
    dx, dy = spec.warp.displacement(x, y)
    return MorphMap(Tensor(np.stack([dx, dy], axis=-1)), eta)


def segment_by_palette(image: FloatArray | Tensor, spec: DomainSpec) -> LabelMap:
    """Label each pixel of a (3, H, W) [0, 1] image by its nearest palette colour (background is 0)."""

    data = image.data if isinstance(image, Tensor) else np.asarray(image)
    if data.ndim != 3 or data.shape[0] != 3:
        raise DegenerateSpecError(f"Expected a (3, H, W) image, got {data.shape}")
    colours = np.array([spec.background, *spec.palette], dtype=np.float64)
    distance = np.sum((data.transpose(1, 2, 0)[:, :, None, :] - colours[None, None]) ** 2, axis=-1)
    return LabelMap(np.argmin(distance, axis=-1), spec.num_classes)
