"""Counter-based random streams.

All randomness goes through numpy's Philox generator, a 64-bit counter-based
bit generator whose output is identical across platforms. Streams are keyed
by a seed plus any number of integer or string keys, so `(seed, step, "z")`
always yields the same draws no matter what else was sampled before.
"""

from __future__ import annotations

import zlib
from collections.abc import Sequence

import numpy as np

from pmgan.utils.types import Distribution, Shape

from .exception import ShapeError
from .tensor import Tensor, current_dtype

type Seed = int | Sequence[int | str] | np.random.Generator


def _key(part: int | str) -> int:
    return zlib.crc32(part.encode("utf-8")) if isinstance(part, str) else int(part)


def generator(seed: int, *keys: int | str) -> np.random.Generator:
    entropy = [_key(seed), *(_key(k) for k in keys)]
    if any(e < 0 for e in entropy):
        raise ValueError(f"Seeds and keys must be non-negative, got {entropy}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _as_generator(seed: Seed) -> np.random.Generator:
    match seed:
        case np.random.Generator():
            return seed
        case int() | np.integer():
            return generator(int(seed))
        case [first, *rest]:
            return generator(_key(first), *rest)
        case _:
            raise ValueError(f"Invalid seed: {seed!r}")


def rng_fill(shape: Shape, seed: Seed, distribution: Distribution = "normal") -> Tensor:
    """Fill a tensor from a seeded stream.

    `normal` draws from N(0, 1); `uniform` draws from [0, 1).

    Raises:
        ShapeError: If the shape is empty or has a non-positive dimension.
    """

    shape = tuple(shape)
    if not shape or any(dim <= 0 for dim in shape):
        raise ShapeError(f"rng_fill needs a non-empty shape of positive dims, got {shape}")
    rng = _as_generator(seed)
    dtype = current_dtype()
    match distribution:
        case "normal":
            data = rng.standard_normal(shape, dtype=dtype)
        case "uniform":
            data = rng.random(shape, dtype=dtype)
        case _:
            raise ValueError(f"Unknown distribution: {distribution}")
    return Tensor(data)
