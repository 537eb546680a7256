from __future__ import annotations

import os
from typing import Literal

import numpy as np
from numpy.typing import NDArray

type Shape = tuple[int, ...]
type RGB = tuple[float, float, float]
type PathLike = str | os.PathLike[str]

type FloatArray = NDArray[np.floating]
type IntArray = NDArray[np.integer]

type ResampleMode = Literal["bilinear", "nearest"]
type Distribution = Literal["normal", "uniform"]
