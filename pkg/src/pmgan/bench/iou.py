from __future__ import annotations

import numpy as np
from attrs import frozen

from pmgan.morph import LabelMap

from .exception import MetricInputError


@frozen
class IoUReport:
    per_class: dict[int, float]
    """IoU of every class present in either map."""
    mean: float
    intersections: dict[int, int]
    unions: dict[int, int]
    pixels: int


def miou(pred: LabelMap, ref: LabelMap) -> IoUReport:
    """Per-class |pred=c and ref=c| / |pred=c or ref=c|, averaged over classes with a non-empty union."""

    if pred.labels.shape != ref.labels.shape:
        raise MetricInputError(f"Label maps differ in shape: {pred.labels.shape} vs {ref.labels.shape}")
    classes = np.union1d(np.unique(pred.labels), np.unique(ref.labels))
    intersections: dict[int, int] = {}
    unions: dict[int, int] = {}
    for c in classes.tolist():
        p, r = pred.labels == c, ref.labels == c
        intersections[c] = int(np.count_nonzero(p & r))
        unions[c] = int(np.count_nonzero(p | r))
    per_class = {c: intersections[c] / unions[c] for c in unions}
    mean = float(np.mean(list(per_class.values()))) if per_class else float("nan")
    return IoUReport(per_class, mean, intersections, unions, int(pred.labels.size))
