from __future__ import annotations

import numpy as np

from pmgan.numeric import Tensor

from .exception import MorphShapeError


def positional_encoding(height: int, width: int, channels: int = 512) -> Tensor:
    """2-D sinusoidal encoding of shape (C, H, W).

    For c in [0, C/4), with x the column and y the row index (integers from 0):
    channel 4c is sin(x / 10000^(8c/C)), 4c+1 is cos of the same,
    4c+2 is sin(y / 10000^((8c+4)/C)) and 4c+3 is cos of that.
    """

    if channels % 4:
        raise MorphShapeError(f"channels must be divisible by 4, got {channels}")
    c = np.arange(channels // 4, dtype=np.float64)[:, None, None]
    x = np.arange(width, dtype=np.float64)[None, None, :]
    y = np.arange(height, dtype=np.float64)[None, :, None]
    phase_x = np.broadcast_to(x / 10000.0 ** (8.0 * c / channels), (channels // 4, height, width))
    phase_y = np.broadcast_to(y / 10000.0 ** ((8.0 * c + 4.0) / channels), (channels // 4, height, width))

    pe = np.empty((channels, height, width), dtype=np.float64)
    pe[0::4] = np.sin(phase_x)
    pe[1::4] = np.cos(phase_x)
    pe[2::4] = np.sin(phase_y)
    pe[3::4] = np.cos(phase_y)
    return Tensor(pe)
