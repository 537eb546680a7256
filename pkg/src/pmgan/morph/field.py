from __future__ import annotations

from typing import Self

import numpy as np
from attrs import field, frozen, validators

from pmgan.numeric import Tensor, current_dtype, ops

from .exception import MorphError, MorphShapeError
from .grid import SamplingGrid, _check_field


@frozen
class MorphConfig:
    eta: float = field(default=3.0, validator=validators.gt(0.0))
    """Maximum displacement divisor: normalized maps stay inside [-1/eta, 1/eta]."""


@frozen
class MorphMap:
    """Relative displacement field in normalized coordinates, order (dx, dy).

    Holds a single (H, W, 2) map or a batch (N, H, W, 2).
    """

    values: Tensor = field(validator=_check_field)
    eta: float = field(default=3.0, validator=validators.gt(0.0))

    @classmethod
    def zeros(cls, height: int, width: int, eta: float = 3.0, batch: int | None = None) -> Self:
        shape = (height, width, 2) if batch is None else (batch, height, width, 2)
        return cls(Tensor(np.zeros(shape)), eta)

    @property
    def height(self) -> int:
        return self.values.shape[-3]

    @property
    def width(self) -> int:
        return self.values.shape[-2]

    @property
    def batched(self) -> bool:
        return self.values.ndim == 4

    def max_displacement(self) -> float:
        return float(np.max(np.abs(self.values.data)))

    def within_bounds(self) -> bool:
        return self.max_displacement() < 1.0 / self.eta

    def select(self, index: int) -> MorphMap:
        """One map out of a batch."""
        if not self.batched:
            raise MorphShapeError("select() needs a batched map")
        return MorphMap(ops.select(self.values, index), self.eta)


def _strict_scale(eta: float) -> float:
    # tanh saturates to exactly 1 in float32, so 1/eta itself would touch the bound.
    dtype = current_dtype().type
    scale = dtype(1.0 / eta)
    while float(scale) >= 1.0 / eta:
        scale = np.nextafter(scale, dtype(0.0))
    return float(scale)


def normalize_map(raw: Tensor, config: MorphConfig) -> MorphMap:
    """tanh(raw) / eta, strictly inside the displacement bound.

    The divisor is applied as the largest working-dtype value below 1/eta, so
    a saturated tanh (exactly 1 in float32) still stays inside the bound. The
    scale differs from 1/eta by at most one ulp of the working dtype.
    """

    return MorphMap(ops.scale(ops.tanh(raw), _strict_scale(config.eta)), config.eta)


def compose_grid(grid: SamplingGrid, morph: MorphMap) -> SamplingGrid:
    if grid.values.shape[-3:] != morph.values.shape[-3:]:
        raise MorphShapeError(f"Grid {grid.values.shape} does not match map {morph.values.shape}")
    return SamplingGrid(ops.add(grid.values, morph.values))


def lerp_maps(a: MorphMap, b: MorphMap, t: float) -> MorphMap:
    if a.values.shape != b.values.shape:
        raise MorphShapeError(f"Cannot interpolate maps {a.values.shape} and {b.values.shape}")
    if not 0.0 <= t <= 1.0:
        raise MorphError(f"Interpolation weight must lie in [0, 1], got {t}")
    return MorphMap(ops.lerp(a.values, b.values, t), a.eta)


def offset_map(
    morph: MorphMap,
    center: tuple[float, float],
    peak: tuple[float, float],
    sigma: float,
) -> MorphMap:
    """Add a Gaussian bump of displacement `peak` centred at `center`.

    Coordinates are normalized. The result is clamped to [-1, 1] and may exceed
    the map's 1/eta bound; keeping edits sensible is up to the caller.
    """

    if sigma <= 0:
        raise MorphError(f"sigma must be positive, got {sigma}")
    ys = ops.identity_axis(morph.height, np.dtype(np.float64))[:, None]
    xs = ops.identity_axis(morph.width, np.dtype(np.float64))[None, :]
    bump = np.exp(-((xs - center[0]) ** 2 + (ys - center[1]) ** 2) / (2.0 * sigma**2))
    delta = np.stack([peak[0] * bump, peak[1] * bump], axis=-1)
    values = np.clip(morph.values.data + delta, -1.0, 1.0)
    return MorphMap(Tensor(values), morph.eta)
