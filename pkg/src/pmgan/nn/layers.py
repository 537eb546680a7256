from __future__ import annotations

from typing import Self

import numpy as np
from attrs import define

from pmgan.numeric import Tensor, ops
from pmgan.utils.types import FloatArray

from .exception import LayerError
from .init import constant, kaiming_normal
from .params import Module, Parameter

DEMOD_EPS = 1e-8


@define(eq=False)
class Linear(Module):
    """`y = x W^T + b` on (N, in) batches."""

    weight: Parameter
    """(out_features, in_features)"""
    bias: Parameter
    """(out_features,)"""

    @classmethod
    def create(
        cls, in_features: int, out_features: int, rng: np.random.Generator, *, bias_init: float = 0.0
    ) -> Self:
        return cls(
            Parameter(kaiming_normal((out_features, in_features), in_features, rng)),
            Parameter(constant((out_features,), bias_init)),
        )

    @property
    def in_features(self) -> int:
        return self.weight.shape[1]

    @property
    def out_features(self) -> int:
        return self.weight.shape[0]

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise LayerError(f"Linear expects (N, {self.in_features}), got {x.shape}")
        return ops.add(ops.matmul(x, ops.transpose(self.weight.value)), self.bias.value)


def _bias_4d(bias: Parameter) -> Tensor:
    return ops.reshape(bias.value, (1, bias.shape[0], 1, 1))


@define(eq=False)
class Conv2d(Module):
    """Square-kernel convolution; 3x3 stride-1 layers use padding 1 and keep H, W."""

    weight: Parameter
    """(out_channels, in_channels, k, k)"""
    bias: Parameter
    stride: int = 1
    padding: int = 0

    @classmethod
    def create(
        cls,
        in_channels: int,
        out_channels: int,
        kernel: int,
        rng: np.random.Generator,
        *,
        stride: int = 1,
        padding: int | None = None,
    ) -> Self:
        if kernel not in (1, 3):
            raise LayerError(f"Only 1x1 and 3x3 kernels are supported, got {kernel}")
        return cls(
            Parameter(kaiming_normal((out_channels, in_channels, kernel, kernel), in_channels * kernel**2, rng)),
            Parameter(constant((out_channels,))),
            stride,
            kernel // 2 if padding is None else padding,
        )

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise LayerError(f"Conv2d expects (N, {self.in_channels}, H, W), got {x.shape}")
        out = ops.conv2d(x, self.weight.value, self.stride, self.padding)
        return ops.add(out, _bias_4d(self.bias))


@define(eq=False)
class ModulatedConv2d(Module):
    """Style-modulated convolution.

    The per-sample kernel is `W * s` with `s = style(w) + 1` scaling input
    channels; with demodulation every output filter is rescaled to unit norm.
    It is evaluated as scale-input, shared conv, scale-output, which is the
    same linear map and keeps the batch in one convolution.
    """

    weight: Parameter
    bias: Parameter
    style: Linear
    demodulate: bool = True
    padding: int = 1

    @classmethod
    def create(
        cls,
        in_channels: int,
        out_channels: int,
        kernel: int,
        latent_dim: int,
        rng: np.random.Generator,
        *,
        demodulate: bool = True,
    ) -> Self:
        return cls(
            Parameter(kaiming_normal((out_channels, in_channels, kernel, kernel), in_channels * kernel**2, rng)),
            Parameter(constant((out_channels,))),
            Linear.create(latent_dim, in_channels, rng),
            demodulate,
            kernel // 2,
        )

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    def styles(self, w: Tensor) -> Tensor:
        return ops.add(self.style(w), 1.0)

    def demodulation(self, styles: Tensor) -> Tensor:
        """(N, O) factors `rsqrt(sum_c s_c^2 |W_oc|^2 + eps)`."""
        energy = ops.sum(ops.square(self.weight.value), axis=(2, 3))
        return ops.rsqrt(ops.add(ops.matmul(ops.square(styles), ops.transpose(energy)), DEMOD_EPS))

    def __call__(self, x: Tensor, w: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise LayerError(f"ModulatedConv2d expects (N, {self.in_channels}, H, W), got {x.shape}")
        if w.ndim != 2 or w.shape != (x.shape[0], self.style.in_features):
            raise LayerError(f"Latent must be ({x.shape[0]}, {self.style.in_features}), got {w.shape}")
        n = x.shape[0]
        s = self.styles(w)
        out = ops.conv2d(ops.mul(x, ops.reshape(s, (n, self.in_channels, 1, 1))), self.weight.value, 1, self.padding)
        if self.demodulate:
            out = ops.mul(out, ops.reshape(self.demodulation(s), (n, self.out_channels, 1, 1)))
        return ops.add(out, _bias_4d(self.bias))


def effective_kernel(layer: ModulatedConv2d, w: Tensor) -> FloatArray:
    """Per-sample kernel (N, O, C, k, k) that `layer` applies for latents `w`."""

    s = layer.styles(w).data
    kernel = layer.weight.value.data[None] * s[:, None, :, None, None]
    if layer.demodulate:
        kernel = kernel * layer.demodulation(Tensor(s)).data[:, :, None, None, None]
    return kernel
