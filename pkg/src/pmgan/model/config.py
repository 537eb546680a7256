from __future__ import annotations

from typing import Any, Self

from attrs import field, frozen, validators

from pmgan.morph import MorphConfig

from .exception import ModelConfigError

_TOP_CHANNELS = (128, 256)
_BASE_CHANNELS = 512


def _multiple_of_four(_: Any, attribute: Any, value: int) -> None:
    if value % 4:
        raise ModelConfigError(f"{attribute.name} must be divisible by 4, got {value}")


@frozen
class ModelConfig:
    """Architecture of the PMGAN model.

    Every count is a fixed ratio of the 256x256 configuration: `full_scale()`
    returns that configuration, the defaults are the desk-scale one.

    | quantity            | full  | desk |
    |---------------------|-------|------|
    | levels (top side)   | 7/256 | 4/32 |
    | latent dim          | 512   | 64   |
    | reducer channels    | 128   | 16   |
    | trunk channels      | 512   | 64   |
    | morph head channels | 512   | 64   |
    | channel scale       | 1     | 1/8  |
    """

    levels: int = field(default=4, validator=validators.ge(1))
    """Number of synthesis levels; level l has side 2^(l+2)."""

    latent_dim: int = field(default=64, validator=validators.ge(1))
    """Dimension of z and w."""

    mapping_depth: int = field(default=3, validator=validators.ge(1))
    """Number of linear layers in the mapping network."""

    reducer_channels: int = field(default=16, validator=validators.ge(1))
    """Channels each level is reduced to before merging."""

    trunk_channels: int = field(default=64, validator=_multiple_of_four)
    """Width of the shared MorphNet trunk and of the positional encoding."""

    head_channels: int = field(default=64, validator=validators.ge(1))
    """Width of the first conv of each morph head."""

    channel_scale: float = field(default=0.125, validator=validators.gt(0.0))
    """Multiplier on the synthesis channel plan (512 ... 256, 128)."""

    num_domains: int = field(default=2, validator=validators.ge(1))

    eta: float = field(default=3.0, validator=validators.gt(0.0))
    """Morph range: normalized maps are bounded by 1/eta."""

    shared_k: int = field(default=1, validator=validators.ge(0))
    """Number of leading render layers shared by all domains."""

    demodulate: bool = True

    morph_enabled: bool = True
    """Disable to bypass MorphNet entirely (the no-morph ablation)."""

    seed: int = field(default=0, validator=validators.ge(0))

    @shared_k.validator
    def _check_shared(self, _: Any, value: int) -> None:
        if value > self.levels:
            raise ModelConfigError(f"shared_k={value} exceeds levels={self.levels}")

    @classmethod
    def full_scale(cls, num_domains: int = 2, **overrides: Any) -> Self:
        return cls(
            levels=7,
            latent_dim=512,
            reducer_channels=128,
            trunk_channels=512,
            head_channels=512,
            channel_scale=1.0,
            num_domains=num_domains,
            **overrides,
        )

    @property
    def resolutions(self) -> tuple[int, ...]:
        return tuple(2 ** (level + 2) for level in range(self.levels))

    @property
    def top_resolution(self) -> int:
        return self.resolutions[-1]

    @property
    def channels(self) -> tuple[int, ...]:
        """Per-level synthesis channels; the top two levels are narrower."""

        plan = [_BASE_CHANNELS] * self.levels
        for offset, width in enumerate(_TOP_CHANNELS, start=1):
            if offset <= self.levels:
                plan[-offset] = width
        return tuple(max(1, round(c * self.channel_scale)) for c in plan)

    @property
    def morph(self) -> MorphConfig:
        return MorphConfig(eta=self.eta)
