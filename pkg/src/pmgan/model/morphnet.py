from __future__ import annotations

from collections.abc import Sequence
from typing import Self

import numpy as np
from attrs import define

from pmgan.morph import MorphConfig, MorphMap, normalize_map, positional_encoding
from pmgan.nn import Conv2d, Module, leaky_relu
from pmgan.numeric import Tensor, ops

from .config import ModelConfig
from .exception import ModelError


@define(eq=False)
class MorphHead(Module):
    """Per-domain head: two preserving 3x3 convs down to the 2-channel raw map."""

    conv0: Conv2d
    conv1: Conv2d

    @classmethod
    def create(cls, config: ModelConfig, rng: np.random.Generator) -> Self:
        return cls(
            Conv2d.create(config.trunk_channels, config.head_channels, 3, rng),
            Conv2d.create(config.head_channels, 2, 3, rng),
        )

    def __call__(self, trunk: Tensor, config: MorphConfig) -> MorphMap:
        raw = self.conv1(leaky_relu(self.conv0(trunk)))
        return normalize_map(ops.transpose(raw, (0, 2, 3, 1)), config)


@define(eq=False)
class MorphNet(Module):
    """Shared trunk over merged multi-level features plus the per-domain heads."""

    reducers: list[Conv2d]
    trunk: list[Conv2d]
    heads: list[MorphHead]

    @classmethod
    def create(cls, config: ModelConfig, rng: np.random.Generator) -> Self:
        reducers = [Conv2d.create(width, config.reducer_channels, 1, rng) for width in config.channels]
        merged = config.levels * config.reducer_channels
        trunk = [
            Conv2d.create(merged, config.trunk_channels, 3, rng),
            Conv2d.create(config.trunk_channels, config.trunk_channels, 3, rng),
        ]
        heads = [MorphHead.create(config, rng) for _ in range(config.num_domains)]
        return cls(reducers, trunk, heads)

    def merge(self, features: Sequence[Tensor]) -> Tensor:
        if len(features) != len(self.reducers):
            raise ModelError(f"Expected {len(self.reducers)} feature levels, got {len(features)}")
        top = features[-1].shape[-2:]
        reduced = [
            ops.resize(leaky_relu(reducer(u)), top) for reducer, u in zip(self.reducers, features, strict=True)
        ]
        x = ops.concat(reduced, axis=1)
        for conv in self.trunk:
            x = leaky_relu(conv(x))
        encoding = positional_encoding(top[0], top[1], x.shape[1])
        return ops.add(x, ops.reshape(encoding, (1, *encoding.shape)))
