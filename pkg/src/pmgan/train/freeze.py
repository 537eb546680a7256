from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence

from attrs import field, frozen

from pmgan.model import PMGANModel
from pmgan.nn import Module, Parameter

from .discriminator import Discriminator
from .exception import FreezeError


@frozen
class FrozenParameters:
    """Parameters excluded from optimizer updates, tracked by identity."""

    ids: frozenset[int] = field(factory=frozenset)

    @classmethod
    def of(cls, parameters: Iterable[Parameter]) -> FrozenParameters:
        return cls(frozenset(id(param) for param in parameters))

    def __contains__(self, param: object) -> bool:
        return id(param) in self.ids

    def __or__(self, other: FrozenParameters) -> FrozenParameters:
        return FrozenParameters(self.ids | other.ids)

    def __len__(self) -> int:
        return len(self.ids)

    def trainable(self, named: Mapping[str, Parameter]) -> dict[str, Parameter]:
        return {name: param for name, param in named.items() if param not in self}


def freeze_layers(layers: Sequence[Module], count: int, network: str) -> FrozenParameters:
    """Freeze the parameters of the first `count` layers."""

    if not 0 <= count <= len(layers):
        raise FreezeError(network, count, len(layers))
    return FrozenParameters.of(param for layer in layers[:count] for param in layer.parameters())


def freeze(
    model: PMGANModel,
    discriminators: Sequence[Discriminator],
    g_layers: int = 3,
    d_layers: int = 3,
) -> FrozenParameters:
    """Freeze the first synthesis convolutions of the shared generator and the first layers of every discriminator."""

    frozen = freeze_layers(model.core.synthesis_layers(), g_layers, "shared generator")
    for discriminator in discriminators:
        frozen |= freeze_layers(discriminator.layers(), d_layers, "discriminator")
    return frozen
