from __future__ import annotations

from collections.abc import Callable, Iterator, Mapping, Sequence
from contextlib import contextmanager, nullcontext
from contextvars import ContextVar, Token
from typing import Self

from attrs import define, field, frozen
from loguru import logger

from .exception import TapeError
from .tensor import Tensor, ones_like, zeros_like

type Backward = Callable[[Tensor, tuple[bool, ...]], Sequence[Tensor | None]]
"""Maps the upstream gradient and a per-input "needs gradient" mask to input gradients."""

_active: ContextVar[tuple[GradTape, ...]] = ContextVar("pmgan_tapes", default=())


@frozen
class TapeNode:
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: Backward
    higher_order: bool = True
    """Whether `backward` is itself built from recorded primitives."""


def record(
    op: str,
    inputs: Sequence[Tensor],
    output: Tensor,
    backward: Backward,
    *,
    higher_order: bool = True,
) -> Tensor:
    """Record a primitive on every active tape and return its output.

    This is also the extension point for custom primitives.
    """

    if tapes := _active.get():
        node = TapeNode(op, tuple(inputs), output, backward, higher_order)
        for tape in tapes:
            tape.add_node(node)
    return output


@contextmanager
def no_record() -> Iterator[None]:
    """Run operations without recording them on any tape."""

    token = _active.set(())
    try:
        yield
    finally:
        _active.reset(token)


def active_tapes() -> tuple[GradTape, ...]:
    return _active.get()


@frozen(eq=False)
class Gradients(Mapping[Tensor, Tensor]):
    """Gradient of one scalar output with respect to each requested source."""

    by_uid: dict[int, Tensor]
    sources: tuple[Tensor, ...]

    def __getitem__(self, key: Tensor) -> Tensor:
        return self.by_uid[key.uid]

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.sources)

    def __len__(self) -> int:
        return len(self.sources)


@define(eq=False)
class GradTape:
    """Reverse-mode tape.

    Only operations with at least one tracked input are recorded, and their
    outputs become tracked in turn. Nodes are appended in execution order,
    which is a topological order, so the backward pass walks them in reverse.

    Example:
        ```python
        x = Tensor([3.0])
        with GradTape() as tape:
            tape.watch(x)
            y = ops.sum(x * x)
        tape.gradient(y, [x])[x]  # 6.0
        ```
    """

    nodes: list[TapeNode] = field(factory=list, init=False)
    tracked: set[int] = field(factory=set, init=False)
    _token: Token[tuple[GradTape, ...]] | None = field(default=None, init=False)

    def __enter__(self) -> Self:
        self._token = _active.set((*_active.get(), self))
        return self

    def __exit__(self, *_: object) -> None:
        if self._token is not None:
            _active.reset(self._token)
            self._token = None

    def watch(self, *tensors: Tensor) -> None:
        self.tracked.update(t.uid for t in tensors)

    def is_tracked(self, tensor: Tensor) -> bool:
        return tensor.uid in self.tracked

    def add_node(self, node: TapeNode) -> None:
        if any(t.uid in self.tracked for t in node.inputs):
            self.tracked.add(node.output.uid)
            self.nodes.append(node)

    def gradient(
        self,
        output: Tensor,
        sources: Sequence[Tensor],
        *,
        create_graph: bool = False,
    ) -> Gradients:
        """Compute d(output)/d(source) for every source.

        Args:
            output: A single-element tensor produced while this tape was active.
            sources: Tracked tensors. Sources the output does not depend on get zeros.
            create_graph: Record the backward pass on the active tapes so the
                returned gradients can be differentiated again.

        Raises:
            TapeError: If the output is not scalar, a source is not on the tape,
                or a higher-order gradient passes through a primitive that does not
                support one.
        """

        if output.size != 1:
            raise TapeError(f"Gradient output must be scalar, got shape {output.shape}")
        for source in sources:
            if source.uid not in self.tracked:
                raise TapeError(f"Tensor {source.uid} with shape {source.shape} is not on the tape")

        grads: dict[int, Tensor] = {}
        if output.uid in self.tracked:
            grads[output.uid] = ones_like(output)
            nodes = list(self.nodes)
            with nullcontext() if create_graph else no_record():
                for node in reversed(nodes):
                    upstream = grads.get(node.output.uid)
                    if upstream is None:
                        continue
                    needs = tuple(t.uid in self.tracked for t in node.inputs)
                    if not any(needs):
                        continue
                    if create_graph and not node.higher_order:
                        raise TapeError(f"`{node.op}` does not support higher-order gradients")
                    input_grads = node.backward(upstream, needs)
                    for tensor, need, grad in zip(node.inputs, needs, input_grads, strict=True):
                        if not need or grad is None:
                            continue
                        previous = grads.get(tensor.uid)
                        grads[tensor.uid] = grad if previous is None else ops.add(previous, grad)
        else:
            logger.debug("Gradient output does not depend on any tracked value")

        by_uid: dict[int, Tensor] = {}
        for source in sources:
            grad = grads.get(source.uid)
            by_uid[source.uid] = zeros_like(source) if grad is None else grad
        return Gradients(by_uid, tuple(sources))


from . import ops  # noqa: E402
