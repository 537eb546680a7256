from __future__ import annotations

from collections.abc import Sequence
from typing import Self

import numpy as np
from attrs import define

from pmgan.nn import ModulatedConv2d, Module, leaky_relu, upsample
from pmgan.numeric import Tensor, ops

from .config import ModelConfig


@define(eq=False)
class RenderLayer(Module):
    """Three modulated convs turning one level of morphed features into RGB."""

    conv0: ModulatedConv2d
    conv1: ModulatedConv2d
    to_rgb: ModulatedConv2d

    @classmethod
    def create(cls, width: int, config: ModelConfig, rng: np.random.Generator) -> Self:
        latent = config.latent_dim
        return cls(
            ModulatedConv2d.create(width, width, 3, latent, rng, demodulate=config.demodulate),
            ModulatedConv2d.create(width, width, 3, latent, rng, demodulate=config.demodulate),
            ModulatedConv2d.create(width, 3, 1, latent, rng, demodulate=False),
        )

    def __call__(self, x: Tensor, w: Tensor) -> Tensor:
        x = leaky_relu(self.conv0(x, w))
        x = leaky_relu(self.conv1(x, w))
        return self.to_rgb(x, w)


def render_layers(layers: Sequence[RenderLayer], features: Sequence[Tensor], w: Tensor) -> Tensor:
    """Skip-sum the per-level RGB outputs, upsampling between levels."""

    image: Tensor | None = None
    for layer, x in zip(layers, features, strict=True):
        rgb = layer(x, w)
        image = rgb if image is None else ops.add(upsample(image), rgb)
    assert image is not None
    return image


@define(eq=False)
class RenderHeads(Module):
    """Per-domain render layers. The first `shared_k` levels are the same objects for every domain."""

    domains: list[list[RenderLayer]]

    @classmethod
    def create(cls, config: ModelConfig, rng: np.random.Generator) -> Self:
        shared = [RenderLayer.create(width, config, rng) for width in config.channels[: config.shared_k]]
        domains = [
            shared + [RenderLayer.create(width, config, rng) for width in config.channels[config.shared_k :]]
            for _ in range(config.num_domains)
        ]
        return cls(domains)

    def render(self, index: int, features: Sequence[Tensor], w: Tensor) -> Tensor:
        return render_layers(self.domains[index], features, w)
