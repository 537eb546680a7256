from __future__ import annotations

from typing import Any

from attrs import Factory, field, frozen, validators

from pmgan.model import ModelConfig

from .exception import FreezeError, TrainDataError


@frozen
class TrainConfig:
    """Training recipe. Serialized as the `train` JSON config; `model` nests the architecture."""

    model: ModelConfig = Factory(ModelConfig)

    steps: int = field(default=2000, validator=validators.ge(0))

    batch_size: int = field(default=8, validator=validators.ge(1))

    g_lr: float = field(default=2.5e-3, validator=validators.gt(0.0))

    d_lr: float = field(default=2.5e-3, validator=validators.gt(0.0))

    betas: tuple[float, float] = (0.0, 0.99)
    """Adam (beta1, beta2) for generator and discriminators."""

    r1_gamma: float = field(default=1.0, validator=validators.ge(0.0))
    """R1 coefficient; 0 disables the penalty."""

    r1_interval: int = field(default=16, validator=validators.ge(1))
    """Lazy R1: the penalty is applied every this many steps, scaled by the interval."""

    freeze_g: int = field(default=3, validator=validators.ge(0))
    """Leading synthesis convolutions of the shared generator that are not updated."""

    freeze_d: int = field(default=3, validator=validators.ge(0))
    """Leading layers of every discriminator that are not updated."""

    warm_start_steps: int = field(default=0, validator=validators.ge(0))
    """Parent-only steps before the domains join; freezing starts afterwards and never happens when this is 0."""

    low_data: bool = False
    """Weigh each domain's losses by its dataset size relative to the largest domain."""

    domain_sizes: tuple[int, ...] | None = None
    """Sizes used for loss weighting instead of the dataset sizes, domains 1..N."""

    morph_supervision_weight: float = field(default=0.0, validator=validators.ge(0.0))
    """Weight of an L2 loss pulling each morph map towards its known ground truth."""

    disc_channels: int = field(default=32, validator=validators.ge(1))

    disc_max_channels: int = field(default=128, validator=validators.ge(1))

    log_every: int = field(default=50, validator=validators.ge(1))

    checkpoint_every: int = field(default=500, validator=validators.ge(0))
    """0 writes only the final checkpoint."""

    seed: int = field(default=0, validator=validators.ge(0))

    @freeze_g.validator
    def _check_freeze_g(self, _: Any, value: int) -> None:
        available = 2 * self.model.levels - 1
        if value > available:
            raise FreezeError("shared generator", value, available)

    @domain_sizes.validator
    def _check_sizes(self, _: Any, value: tuple[int, ...] | None) -> None:
        if value is not None and len(value) != self.model.num_domains:
            raise TrainDataError(f"domain_sizes needs {self.model.num_domains} entries, got {len(value)}")
