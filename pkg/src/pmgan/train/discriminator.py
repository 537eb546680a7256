from __future__ import annotations

from typing import Self

import numpy as np
from attrs import define

from pmgan.nn import Conv2d, Linear, LayerError, Module, copy_module, leaky_relu
from pmgan.numeric import Tensor, ops

MIN_RESOLUTION = 4


@define(eq=False)
class Discriminator(Module):
    """1x1 from-RGB conv, stride-2 3x3 blocks down to 4x4, then a linear logit head."""

    from_rgb: Conv2d
    blocks: list[Conv2d]
    head: Linear

    @classmethod
    def create(
        cls,
        image_size: int,
        rng: np.random.Generator,
        *,
        channels: int = 32,
        max_channels: int = 128,
    ) -> Self:
        if image_size < MIN_RESOLUTION or image_size & (image_size - 1):
            raise LayerError(f"Discriminator needs a power-of-two image size >= {MIN_RESOLUTION}, got {image_size}")
        from_rgb = Conv2d.create(3, channels, 1, rng)
        blocks = []
        width, size = channels, image_size
        while size > MIN_RESOLUTION:
            wider = min(width * 2, max_channels)
            blocks.append(Conv2d.create(width, wider, 3, rng, stride=2, padding=1))
            width, size = wider, size // 2
        head = Linear.create(width * MIN_RESOLUTION**2, 1, rng)
        return cls(from_rgb, blocks, head)

    def layers(self) -> list[Module]:
        """Layers in forward order; the unit counted by layer freezing."""
        return [self.from_rgb, *self.blocks, self.head]

    def clone(self) -> Discriminator:
        return copy_module(self)

    def __call__(self, x: Tensor) -> Tensor:
        """(N, 3, S, S) images to (N,) logits."""

        h = leaky_relu(self.from_rgb(x))
        for block in self.blocks:
            h = leaky_relu(block(h))
        return ops.reshape(self.head(ops.reshape(h, (h.shape[0], -1))), (h.shape[0],))
