from __future__ import annotations

from collections.abc import Sequence
from typing import Self

from attrs import define, frozen
from loguru import logger

from pmgan.morph import MorphMap, morph_features
from pmgan.nn import Module, lerp_modules
from pmgan.numeric import Tensor, generator, ops, rng_fill

from .config import ModelConfig
from .core import CoreGenerator
from .exception import ModelError, UnknownDomainError
from .morphnet import MorphHead, MorphNet
from .render import RenderHeads, RenderLayer, render_layers

PARENT = 0
"""Domain index of the parent; child domains are numbered 1..N."""


@frozen
class Inference:
    """Everything one forward pass produces for a batch of latents."""

    w: Tensor
    features: tuple[Tensor, ...]
    parent: Tensor
    domains: tuple[Tensor, ...]
    maps: tuple[MorphMap, ...]

    @property
    def images(self) -> tuple[Tensor, ...]:
        """Domain images 1..N followed by the parent image."""
        return (*self.domains, self.parent)


@define(eq=False)
class PMGANModel(Module):
    """Core generator, MorphNet and per-domain render heads."""

    config: ModelConfig
    core: CoreGenerator
    morphnet: MorphNet
    render_heads: RenderHeads

    @classmethod
    def create(cls, config: ModelConfig) -> Self:
        logger.debug("Building model with channels {}", config.channels)
        return cls(
            config,
            CoreGenerator.create(config, generator(config.seed, "init", "core")),
            MorphNet.create(config, generator(config.seed, "init", "morphnet")),
            RenderHeads.create(config, generator(config.seed, "init", "render")),
        )

    @property
    def num_domains(self) -> int:
        return self.config.num_domains

    @property
    def image_size(self) -> int:
        return self.config.top_resolution

    def check_domain(self, domain: int, *, allow_parent: bool = False) -> None:
        low = PARENT if allow_parent else 1
        if not low <= domain <= self.num_domains:
            raise UnknownDomainError(domain, self.num_domains)

    def sample_latents(self, count: int, seed: int) -> Tensor:
        return rng_fill((count, self.config.latent_dim), generator(seed, "latent"))

    # --- inference building blocks --------------------------------------------

    def mapping(self, z: Tensor) -> Tensor:
        return self.core.map(z)

    def synthesize_features(self, w: Tensor) -> tuple[tuple[Tensor, ...], Tensor]:
        out = self.core.synthesize(w)
        return out.features, out.image

    def merge_features(self, features: Sequence[Tensor]) -> Tensor:
        return self.morphnet.merge(features)

    def morph_head(self, trunk: Tensor, domain: int) -> MorphMap:
        self.check_domain(domain)
        return self.morphnet.heads[domain - 1](trunk, self.config.morph)

    def zero_maps(self, batch: int) -> MorphMap:
        size = self.image_size
        return MorphMap.zeros(size, size, self.config.eta, batch=batch)

    def morph_features(self, features: Sequence[Tensor], morph: MorphMap) -> tuple[Tensor, ...]:
        """Warp every level by the (resized) map; identity when morphing is disabled."""
        if not self.config.morph_enabled:
            return tuple(features)
        return tuple(morph_features(u, morph) for u in features)

    def render_domain(self, morphed: Sequence[Tensor], w: Tensor, domain: int) -> Tensor:
        self.check_domain(domain)
        return self.render_heads.render(domain - 1, morphed, w)

    def domain_maps(self, features: Sequence[Tensor]) -> tuple[MorphMap, ...]:
        batch = features[0].shape[0]
        if not self.config.morph_enabled:
            return tuple(self.zero_maps(batch) for _ in range(self.num_domains))
        trunk = self.merge_features(features)
        return tuple(self.morph_head(trunk, d) for d in range(1, self.num_domains + 1))

    # --- inference ------------------------------------------------------------

    def infer_w(self, w: Tensor) -> Inference:
        features, parent = self.synthesize_features(w)
        maps = self.domain_maps(features)
        domains = tuple(
            self.render_domain(self.morph_features(features, morph), w, d)
            for d, morph in enumerate(maps, start=1)
        )
        return Inference(w, features, parent, domains, maps)

    def infer(self, z: Tensor) -> Inference:
        """Features once, merge once, then per domain: map, morph every level, render."""
        return self.infer_w(self.mapping(z))

    def render(self, w: Tensor, domain: int) -> Tensor:
        """Image of one domain (or the parent) for latents `w`."""

        self.check_domain(domain, allow_parent=True)
        features, parent = self.synthesize_features(w)
        if domain == PARENT:
            return parent
        if self.config.morph_enabled:
            morph = self.morph_head(self.merge_features(features), domain)
        else:
            morph = self.zero_maps(w.shape[0])
        return self.render_domain(self.morph_features(features, morph), w, domain)

    def render_all(self, w: Tensor) -> tuple[Tensor, ...]:
        return self.infer_w(w).images

    def infer_swapped(self, z: Tensor, source: int, target: int) -> Tensor:
        """Render for `source` with the morph map of `target`."""

        self.check_domain(source)
        self.check_domain(target)
        w = self.mapping(z)
        features, _ = self.synthesize_features(w)
        if self.config.morph_enabled:
            morph = self.morph_head(self.merge_features(features), target)
        else:
            morph = self.zero_maps(w.shape[0])
        return self.render_domain(self.morph_features(features, morph), w, source)

    def infer_interpolated(
        self,
        z_a: Tensor,
        z_b: Tensor,
        domain_a: int,
        domain_b: int,
        t: float,
        *,
        fix_map_of_a: bool = False,
    ) -> Tensor:
        """Interpolate latents and domain-specific layers between (z_a, A) and (z_b, B).

        The mapping network and shared render layers are untouched. With
        `fix_map_of_a` the morph map is always A's head on z_a's features,
        i.e. frozen at its t=0 value.
        """

        if not 0.0 <= t <= 1.0:
            raise ModelError(f"Interpolation weight must lie in [0, 1], got {t}")
        self.check_domain(domain_a)
        self.check_domain(domain_b)

        w = self.mapping(ops.lerp(z_a, z_b, t))
        features, _ = self.synthesize_features(w)
        head, layers = self.lerp_domain_heads(domain_a, domain_b, t)
        if not self.config.morph_enabled:
            morph = self.zero_maps(w.shape[0])
        elif fix_map_of_a:
            features_a, _ = self.synthesize_features(self.mapping(z_a))
            morph = self.morph_head(self.merge_features(features_a), domain_a)
        else:
            morph = head(self.merge_features(features), self.config.morph)
        return render_layers(layers, self.morph_features(features, morph), w)

    def lerp_domain_heads(self, domain_a: int, domain_b: int, t: float) -> tuple[MorphHead, list[RenderLayer]]:
        """Blend the morph head and the render layers of two domains; shared layers pass through."""

        self.check_domain(domain_a)
        self.check_domain(domain_b)
        heads = self.morphnet.heads
        head = lerp_modules(heads[domain_a - 1], heads[domain_b - 1], t)
        layers_a = self.render_heads.domains[domain_a - 1]
        layers_b = self.render_heads.domains[domain_b - 1]
        layers = [a if a is b else lerp_modules(a, b, t) for a, b in zip(layers_a, layers_b, strict=True)]
        return head, layers
