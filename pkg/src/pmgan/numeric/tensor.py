from __future__ import annotations

import itertools
from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from typing import TYPE_CHECKING, Any

import numpy as np
from attrs import define, field
from numpy.typing import ArrayLike

from pmgan.utils.types import FloatArray, Shape

from .exception import NonFiniteError, ShapeError

if TYPE_CHECKING:
    from numpy.typing import DTypeLike

MAX_RANK = 4

_precision: ContextVar[np.dtype[Any]] = ContextVar(
    "pmgan_precision", default=np.dtype(np.float32)
)
_uids = itertools.count()


def current_dtype() -> np.dtype[Any]:
    return _precision.get()


@contextmanager
def oracle_precision() -> Iterator[None]:
    """Evaluate every tensor created in this scope in float64.

    Gradient checks run inside this scope so that central differences are
    compared against the tape without float32 cancellation noise.
    """

    token = _precision.set(np.dtype(np.float64))
    try:
        yield
    finally:
        _precision.reset(token)


def _to_array(value: ArrayLike | Tensor) -> FloatArray:
    if isinstance(value, Tensor):
        value = value.data
    arr = np.array(value, dtype=current_dtype(), order="C", copy=True)
    if arr.ndim > MAX_RANK:
        raise ShapeError(f"Tensor rank {arr.ndim} exceeds {MAX_RANK}")
    if not np.isfinite(arr).all():
        raise NonFiniteError("tensor", f"Non-finite values in tensor of shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@define(eq=False, repr=False)
class Tensor:
    """Immutable dense array of up to rank 4.

    Every tensor is checked for finiteness when it is created, so NaN or Inf
    never escapes an operation silently.
    """

    data: FloatArray = field(converter=_to_array)
    uid: int = field(init=False, factory=lambda: next(_uids))

    @property
    def shape(self) -> Shape:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype[Any]:
        return self.data.dtype

    def numpy(self) -> FloatArray:
        """Read-only view of the payload."""
        return self.data

    def item(self) -> float:
        if self.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def astype(self, dtype: DTypeLike) -> FloatArray:
        return self.data.astype(dtype)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype})"

    def __add__(self, other: Operand) -> Tensor:
        return ops.add(self, other)

    def __radd__(self, other: Operand) -> Tensor:
        return ops.add(other, self)

    def __sub__(self, other: Operand) -> Tensor:
        return ops.sub(self, other)

    def __rsub__(self, other: Operand) -> Tensor:
        return ops.sub(other, self)

    def __mul__(self, other: Operand) -> Tensor:
        return ops.mul(self, other)

    def __rmul__(self, other: Operand) -> Tensor:
        return ops.mul(other, self)

    def __truediv__(self, other: float) -> Tensor:
        return ops.scale(self, 1.0 / other)

    def __neg__(self) -> Tensor:
        return ops.scale(self, -1.0)

    def __matmul__(self, other: Tensor) -> Tensor:
        return ops.matmul(self, other)

    def reshape(self, *shape: int) -> Tensor:
        return ops.reshape(self, shape)

    def transpose(self, *axes: int) -> Tensor:
        return ops.transpose(self, axes or None)

    def sum(self, axis: int | tuple[int, ...] | None = None) -> Tensor:
        return ops.sum(self, axis)

    def mean(self, axis: int | tuple[int, ...] | None = None) -> Tensor:
        return ops.mean(self, axis)


type Operand = Tensor | float | int | FloatArray


def as_tensor(value: Operand) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def zeros(shape: Shape) -> Tensor:
    return Tensor(np.zeros(shape, dtype=current_dtype()))


def ones(shape: Shape) -> Tensor:
    return Tensor(np.ones(shape, dtype=current_dtype()))


def zeros_like(tensor: Tensor) -> Tensor:
    return zeros(tensor.shape)


def ones_like(tensor: Tensor) -> Tensor:
    return ones(tensor.shape)


from . import ops  # noqa: E402
