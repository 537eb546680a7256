"""PMT1 tensor files.

Layout: magic `PMT1`, u8 rank, rank x u32 little-endian dims, then the
float32 little-endian payload in row-major order.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from pmgan.utils.types import PathLike

from .exception import TensorFormatError
from .tensor import MAX_RANK, Tensor

MAGIC = b"PMT1"


def encode_tensor(tensor: Tensor) -> bytes:
    header = MAGIC + np.uint8(tensor.ndim).tobytes() + np.asarray(tensor.shape, dtype="<u4").tobytes()
    return header + np.ascontiguousarray(tensor.data, dtype="<f4").tobytes()


def decode_tensor(blob: bytes) -> Tensor:
    if len(blob) < 5 or blob[:4] != MAGIC:
        raise TensorFormatError(f"Missing PMT1 magic, got {blob[:4]!r}")
    rank = blob[4]
    if rank > MAX_RANK:
        raise TensorFormatError(f"Rank {rank} exceeds {MAX_RANK}")
    offset = 5 + 4 * rank
    if len(blob) < offset:
        raise TensorFormatError("Truncated PMT1 header")
    if (len(blob) - offset) % 4:
        raise TensorFormatError(f"Payload of {len(blob) - offset} bytes is not float32-aligned")
    dims = tuple(int(d) for d in np.frombuffer(blob, dtype="<u4", count=rank, offset=5))
    payload = np.frombuffer(blob, dtype="<f4", offset=offset) if len(blob) > offset else np.zeros(0, "<f4")
    expected = int(np.prod(dims, dtype=np.int64))
    if payload.size != expected:
        raise TensorFormatError(f"Payload holds {len(blob) - offset} bytes, dims {dims} need {4 * expected}")
    return Tensor(payload.astype(np.float32).reshape(dims))


def save_tensor(path: PathLike, tensor: Tensor) -> None:
    Path(path).write_bytes(encode_tensor(tensor))


def load_tensor(path: PathLike) -> Tensor:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise TensorFormatError(f"Cannot read tensor file {path}") from exc
    return decode_tensor(blob)
