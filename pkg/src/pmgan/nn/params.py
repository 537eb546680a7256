from __future__ import annotations

from collections.abc import Callable, Iterator, Mapping
from typing import Any

import attrs
from attrs import define

from pmgan.numeric import Tensor, ops

from .exception import CheckpointFormatError, LayerError


@define(eq=False)
class Parameter:
    """Mutable holder of an immutable tensor. Updates replace the value."""

    value: Tensor

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def assign(self, value: Tensor) -> None:
        if value.shape != self.value.shape:
            raise LayerError(f"Cannot assign shape {value.shape} to parameter of shape {self.value.shape}")
        self.value = value


def _join(prefix: str, name: str) -> str:
    return f"{prefix}.{name}" if prefix else name


def _walk(value: Any, prefix: str) -> Iterator[tuple[str, Parameter]]:
    match value:
        case Parameter():
            yield prefix, value
        case Module():
            for attribute in attrs.fields(type(value)):
                yield from _walk(getattr(value, attribute.name), _join(prefix, attribute.name))
        case list() | tuple():
            for i, item in enumerate(value):
                yield from _walk(item, _join(prefix, str(i)))
        case _:
            return


class Module:
    """Base class for attrs-defined layers.

    Parameters are discovered by walking attrs fields, lists and tuples, which
    gives each parameter a stable dotted name. A parameter object reachable
    under several names (shared layers) is reported once, under the first name.
    """

    __slots__ = ()

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        seen: set[int] = set()
        for name, param in _walk(self, prefix):
            if id(param) not in seen:
                seen.add(id(param))
                yield name, param

    def parameters(self) -> list[Parameter]:
        return [param for _, param in self.named_parameters()]

    def parameter_aliases(self, prefix: str = "") -> dict[str, str]:
        """Map every duplicate name of a shared parameter to its canonical name."""

        canonical: dict[int, str] = {}
        aliases: dict[str, str] = {}
        for name, param in _walk(self, prefix):
            if id(param) in canonical:
                aliases[name] = canonical[id(param)]
            else:
                canonical[id(param)] = name
        return aliases

    def state_dict(self, prefix: str = "") -> dict[str, Tensor]:
        return {name: param.value for name, param in self.named_parameters(prefix)}

    def load_state_dict(self, tensors: Mapping[str, Tensor], prefix: str = "") -> None:
        for name, param in self.named_parameters(prefix):
            if name not in tensors:
                raise CheckpointFormatError(f"Missing parameter `{name}`")
            try:
                param.assign(tensors[name])
            except LayerError as exc:
                raise CheckpointFormatError(f"Parameter `{name}`: {exc}") from exc


def map_parameters[M: Module](module: M, fn: Callable[[str, Parameter], Parameter]) -> M:
    """Structurally clone a module, replacing every parameter by `fn(name, param)`.

    Sharing is preserved: a parameter or sub-module reachable twice is cloned once.
    """

    memo: dict[int, Any] = {}

    def clone(value: Any, prefix: str) -> Any:
        if id(value) in memo:
            return memo[id(value)]
        match value:
            case Parameter():
                new = fn(prefix, value)
            case Module():
                changes = {
                    attribute.name: clone(getattr(value, attribute.name), _join(prefix, attribute.name))
                    for attribute in attrs.fields(type(value))
                }
                new = attrs.evolve(value, **changes)
            case list():
                new = [clone(item, _join(prefix, str(i))) for i, item in enumerate(value)]
            case tuple():
                new = tuple(clone(item, _join(prefix, str(i))) for i, item in enumerate(value))
            case _:
                return value
        memo[id(value)] = new
        return new

    return clone(module, "")


def copy_module[M: Module](module: M) -> M:
    return map_parameters(module, lambda _, param: Parameter(param.value))


def lerp_modules[M: Module](a: M, b: M, t: float) -> M:
    """Elementwise (1 - t) a + t b over two modules of identical structure."""

    others = dict(b.named_parameters())

    def blend(name: str, param: Parameter) -> Parameter:
        other = others[name]
        if other is param:
            return param
        return Parameter(ops.lerp(param.value, other.value, t))

    return map_parameters(a, blend)
