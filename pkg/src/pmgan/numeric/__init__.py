"""Dense tensors, a reverse-mode gradient tape and the primitives built on it."""

from __future__ import annotations

from . import ops
from .exception import (
    FiniteDifferenceError,
    NonFiniteError,
    NumericError,
    ShapeError,
    TapeError,
    TensorFormatError,
)
from .gradcheck import finite_diff_grad, relative_error
from .io import decode_tensor, encode_tensor, load_tensor, save_tensor
from .rng import generator, rng_fill
from .tape import GradTape, Gradients, TapeNode, no_record, record
from .tensor import Tensor, as_tensor, current_dtype, ones, oracle_precision, zeros

__all__ = [
    "FiniteDifferenceError",
    "GradTape",
    "Gradients",
    "NonFiniteError",
    "NumericError",
    "ShapeError",
    "TapeError",
    "TapeNode",
    "Tensor",
    "TensorFormatError",
    "as_tensor",
    "current_dtype",
    "decode_tensor",
    "encode_tensor",
    "finite_diff_grad",
    "generator",
    "load_tensor",
    "no_record",
    "ones",
    "ops",
    "oracle_precision",
    "record",
    "relative_error",
    "rng_fill",
    "save_tensor",
    "zeros",
]
