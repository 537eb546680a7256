"""Binary PPM (P6) and PGM (P5) images with maxval 255.

Float images in [0, 1] are quantized as round(255 x); model-space images in
[-1, 1] are mapped to [0, 1] first.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from pmgan.numeric import Tensor
from pmgan.utils.types import FloatArray, PathLike

from .exception import ImageFormatError

_HEADER = re.compile(rb"\A(P[56])(?:\s+|#[^\n]*\n)+(\d+)(?:\s+|#[^\n]*\n)+(\d+)(?:\s+|#[^\n]*\n)+(\d+)\s")
_CHANNELS = {b"P5": 1, b"P6": 3}


def quantize(image: FloatArray) -> np.ndarray:
    """[0, 1] floats to uint8 via round(255 x)."""
    return np.rint(np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def to_model_space(pixels: np.ndarray) -> FloatArray:
    """uint8 pixels to float32 in [-1, 1]."""
    return (pixels.astype(np.float32) / np.float32(255.0)) * np.float32(2.0) - np.float32(1.0)


def from_model_space(image: Tensor | FloatArray) -> np.ndarray:
    """Model-space (..., 3, H, W) values in [-1, 1] to uint8."""

    data = image.data if isinstance(image, Tensor) else np.asarray(image)
    return quantize((data.astype(np.float64) + 1.0) * 0.5)


def _header(magic: str, height: int, width: int) -> bytes:
    return f"{magic}\n{width} {height}\n255\n".encode("ascii")


def encode_ppm(pixels: np.ndarray) -> bytes:
    """(3, H, W) uint8 to a P6 file."""

    if pixels.dtype != np.uint8 or pixels.ndim != 3 or pixels.shape[0] != 3:
        raise ImageFormatError(f"PPM needs (3, H, W) uint8 pixels, got {pixels.shape} {pixels.dtype}")
    return _header("P6", *pixels.shape[1:]) + np.ascontiguousarray(pixels.transpose(1, 2, 0)).tobytes()


def encode_pgm(pixels: np.ndarray) -> bytes:
    """(H, W) values in [0, 255] to a P5 file."""

    if pixels.ndim != 2 or (pixels.size and (pixels.min() < 0 or pixels.max() > 255)):
        raise ImageFormatError(f"PGM needs (H, W) values in [0, 255], got {pixels.shape}")
    return _header("P5", *pixels.shape) + pixels.astype(np.uint8).tobytes()


def decode(raw: bytes) -> np.ndarray:
    """Decode P5 to (H, W) or P6 to (3, H, W) uint8."""

    match = _HEADER.match(raw)
    if match is None:
        raise ImageFormatError("Not a binary PPM/PGM header")
    magic, width, height, maxval = match.group(1), *(int(g) for g in match.groups()[1:])
    if maxval != 255:
        raise ImageFormatError(f"Only maxval 255 is supported, got {maxval}")
    channels = _CHANNELS[magic]
    payload = raw[match.end() :]
    expected = width * height * channels
    if len(payload) != expected:
        raise ImageFormatError(f"Expected {expected} payload bytes for {width}x{height}, got {len(payload)}")
    pixels = np.frombuffer(payload, dtype=np.uint8)
    if channels == 1:
        return pixels.reshape(height, width).copy()
    return pixels.reshape(height, width, 3).transpose(2, 0, 1).copy()


def read_image(path: PathLike) -> np.ndarray:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ImageFormatError(f"Cannot read image {path}") from exc
    return decode(raw)


def write_ppm(path: PathLike, pixels: np.ndarray) -> None:
    Path(path).write_bytes(encode_ppm(pixels))


def write_pgm(path: PathLike, pixels: np.ndarray) -> None:
    Path(path).write_bytes(encode_pgm(pixels))


def image_grid(rows: list[list[np.ndarray]]) -> np.ndarray:
    """Tile (3, H, W) uint8 panels into one (3, rows * H, cols * W) image."""

    if not rows or not rows[0]:
        raise ImageFormatError("An image grid needs at least one panel")
    return np.concatenate([np.concatenate(row, axis=2) for row in rows], axis=1)
