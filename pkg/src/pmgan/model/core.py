from __future__ import annotations

from typing import Self

import numpy as np
from attrs import define, frozen

from pmgan.nn import Linear, ModulatedConv2d, Module, Parameter, leaky_relu, upsample
from pmgan.nn.init import kaiming_normal
from pmgan.numeric import Tensor, ops

from .config import ModelConfig
from .exception import ModelError


@frozen
class SynthesisOutput:
    features: tuple[Tensor, ...]
    """u_1 .. u_L, captured before the per-level 1x1 RGB projection."""
    image: Tensor
    """Parent image, the skip-sum of every level's RGB projection."""


@define(eq=False)
class SynthesisLevel(Module):
    convs: list[ModulatedConv2d]
    to_rgb: ModulatedConv2d
    upsample: bool


@define(eq=False)
class CoreGenerator(Module):
    """Mapping network plus the shared synthesis stack."""

    mapping: list[Linear]
    const: Parameter
    levels: list[SynthesisLevel]

    @classmethod
    def create(cls, config: ModelConfig, rng: np.random.Generator) -> Self:
        latent = config.latent_dim
        mapping = [Linear.create(latent, latent, rng) for _ in range(config.mapping_depth)]
        channels = config.channels
        const = Parameter(kaiming_normal((1, channels[0], 4, 4), 1, rng))
        levels = []
        for index, width in enumerate(channels):
            if index == 0:
                convs = [ModulatedConv2d.create(width, width, 3, latent, rng, demodulate=config.demodulate)]
            else:
                convs = [
                    ModulatedConv2d.create(channels[index - 1], width, 3, latent, rng, demodulate=config.demodulate),
                    ModulatedConv2d.create(width, width, 3, latent, rng, demodulate=config.demodulate),
                ]
            to_rgb = ModulatedConv2d.create(width, 3, 1, latent, rng, demodulate=False)
            levels.append(SynthesisLevel(convs, to_rgb, upsample=index > 0))
        return cls(mapping, const, levels)

    @property
    def latent_dim(self) -> int:
        return self.mapping[0].in_features

    def map(self, z: Tensor) -> Tensor:
        if z.ndim != 2 or z.shape[1] != self.latent_dim:
            raise ModelError(f"Latent z must be (N, {self.latent_dim}), got {z.shape}")
        x = z
        for index, layer in enumerate(self.mapping):
            x = layer(x)
            if index < len(self.mapping) - 1:
                x = leaky_relu(x)
        return x

    def synthesize(self, w: Tensor) -> SynthesisOutput:
        n = w.shape[0]
        x = ops.broadcast_to(self.const.value, (n, *self.const.shape[1:]))
        features: list[Tensor] = []
        image: Tensor | None = None
        for level in self.levels:
            if level.upsample:
                x = upsample(x)
            for conv in level.convs:
                x = leaky_relu(conv(x, w))
            features.append(x)
            rgb = level.to_rgb(x, w)
            image = rgb if image is None else ops.add(upsample(image), rgb)
        assert image is not None
        return SynthesisOutput(tuple(features), image)

    def synthesis_layers(self) -> list[ModulatedConv2d]:
        """Feature convolutions in forward order; the unit counted by layer freezing."""
        return [conv for level in self.levels for conv in level.convs]

    def style_layers(self) -> dict[str, Linear]:
        """Style projections of the feature convolutions, keyed by layer name."""
        return {
            f"levels.{li}.convs.{ci}": conv.style
            for li, level in enumerate(self.levels)
            for ci, conv in enumerate(level.convs)
        }
