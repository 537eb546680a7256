"""Cross-domain alignment as the distance between foreground centroids."""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence

import numpy as np
from attrs import frozen

from pmgan.numeric import Tensor
from pmgan.utils.types import FloatArray

from .exception import MetricInputError

FOREGROUND_THRESHOLD = 0.1


@frozen
class PairDistance:
    a: int
    b: int
    distance: float | None
    """None when either image has no foreground."""


@frozen
class AlignmentReport:
    score: float
    """Mean over defined pairs; NaN when no pair is defined."""
    pairs: tuple[PairDistance, ...]

    @property
    def undefined(self) -> tuple[PairDistance, ...]:
        return tuple(pair for pair in self.pairs if pair.distance is None)


def foreground_mask(image: FloatArray | Tensor, threshold: float = FOREGROUND_THRESHOLD) -> np.ndarray:
    """Pixels whose colour departs from the image's median colour by more than `threshold` in any channel."""

    data = np.asarray(image.data if isinstance(image, Tensor) else image, dtype=np.float64)
    if data.ndim != 3 or data.shape[0] != 3:
        raise MetricInputError(f"Expected a (3, H, W) image, got {data.shape}")
    median = np.median(data.reshape(3, -1), axis=1)
    return np.max(np.abs(data - median[:, None, None]), axis=0) > threshold


def centroid(image: FloatArray | Tensor, threshold: float = FOREGROUND_THRESHOLD) -> tuple[float, float] | None:
    """Foreground centroid in normalized [-1, 1] coordinates, or None for an all-background image."""

    mask = foreground_mask(image, threshold)
    if not mask.any():
        return None
    height, width = mask.shape
    ys, xs = np.nonzero(mask)
    return (
        float(np.mean(xs)) * 2.0 / (width - 1) - 1.0,
        float(np.mean(ys)) * 2.0 / (height - 1) - 1.0,
    )


def alignment_score(
    images: Sequence[FloatArray | Tensor], threshold: float = FOREGROUND_THRESHOLD
) -> AlignmentReport:
    """Mean pairwise centroid distance of [0, 1] images rendered from one latent."""

    if len(images) < 2:
        raise MetricInputError(f"Alignment needs at least two images, got {len(images)}")
    centres = [centroid(image, threshold) for image in images]
    pairs = []
    for a, b in itertools.combinations(range(len(images)), 2):
        ca, cb = centres[a], centres[b]
        distance = None if ca is None or cb is None else math.dist(ca, cb)
        pairs.append(PairDistance(a, b, distance))
    defined = [pair.distance for pair in pairs if pair.distance is not None]
    return AlignmentReport(float(np.mean(defined)) if defined else math.nan, tuple(pairs))
