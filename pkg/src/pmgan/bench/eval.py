"""Segmentation-transfer and alignment evaluation of a trained model."""

from __future__ import annotations

import json
import math

import numpy as np
from attrs import frozen
from loguru import logger

from pmgan.model import PARENT, PMGANModel
from pmgan.morph import LabelMap, MorphMap, warp_labels
from pmgan.numeric import Tensor, generator, no_record, ops, rng_fill
from pmgan.shapeworld import Dataset, ground_truth_map, segment_by_palette
from pmgan.utils.convert import value_serialize
from pmgan.utils.types import FloatArray

from .alignment import alignment_score
from .exception import MetricInputError
from .iou import miou


@frozen
class SegTransferRow:
    domain: str
    learned: float
    baseline: float
    samples: int


@frozen
class SegTransferReport:
    rows: tuple[SegTransferRow, ...]

    @property
    def learned(self) -> float:
        return float(np.mean([row.learned for row in self.rows]))

    @property
    def baseline(self) -> float:
        return float(np.mean([row.baseline for row in self.rows]))

    def to_json(self) -> str:
        payload = value_serialize(self)
        payload["mean"] = {"learned": self.learned, "baseline": self.baseline}
        return json.dumps(payload, indent=2) + "\n"

    def table(self) -> str:
        width = max(len("domain"), *(len(row.domain) for row in self.rows))
        lines = [f"{'domain':<{width}}  {'learned':>8}  {'no-morph':>8}  samples"]
        lines += [f"{r.domain:<{width}}  {r.learned:>8.3f}  {r.baseline:>8.3f}  {r.samples:>7}" for r in self.rows]
        lines.append(f"{'mean':<{width}}  {self.learned:>8.3f}  {self.baseline:>8.3f}")
        return "\n".join(lines)


def _unit(image: Tensor) -> FloatArray:
    return np.clip((image.data.astype(np.float64) + 1.0) / 2.0, 0.0, 1.0)


def _check_pair(model: PMGANModel, dataset: Dataset) -> None:
    if len(dataset.specs) != model.num_domains + 1:
        raise MetricInputError(
            f"Dataset has {len(dataset.specs)} domains, model expects {model.num_domains + 1} (parent included)"
        )
    if dataset.manifest.size != model.image_size:
        raise MetricInputError(f"Dataset size {dataset.manifest.size} differs from model size {model.image_size}")


def transfer_miou(parent: LabelMap, morph: MorphMap, truth: MorphMap) -> tuple[float, float]:
    """mIoU of `parent` carried over by `morph`, and of the unwarped baseline.

    Both are scored against `parent` warped by the domain's ground-truth map.
    """

    reference = warp_labels(parent, truth)
    return miou(warp_labels(parent, morph), reference).mean, miou(parent, reference).mean


def seg_transfer_eval(
    model: PMGANModel,
    dataset: Dataset,
    *,
    count: int = 64,
    seed: int = 0,
) -> SegTransferReport:
    """Score morph-transferred parent masks of generated samples.

    For every latent the generated parent image is segmented by palette and
    warped by the map the model predicts for domain d from that same latent.
    The reference is the same parent mask under domain d's ground-truth warp,
    and the baseline scores the unwarped mask against it.
    """

    _check_pair(model, dataset)
    if count < 1:
        raise MetricInputError(f"count must be positive, got {count}")
    size = model.image_size
    with no_record():
        inference = model.infer(model.sample_latents(count, seed))
    parent_spec = dataset.specs[PARENT]
    parents = [segment_by_palette(_unit(ops.select(inference.parent, i)), parent_spec) for i in range(count)]

    rows = []
    for d in range(1, model.num_domains + 1):
        spec = dataset.specs[d]
        truth = ground_truth_map(spec, size, size, model.config.eta)
        scores = [transfer_miou(parents[i], inference.maps[d - 1].select(i), truth) for i in range(count)]
        learned, baseline = np.mean(scores, axis=0)
        rows.append(SegTransferRow(spec.name, float(learned), float(baseline), count))
        logger.debug("Segmentation transfer to `{}`: {:.3f} vs {:.3f}", spec.name, rows[-1].learned, rows[-1].baseline)
    return SegTransferReport(tuple(rows))


@frozen
class AlignmentEval:
    aligned: float
    """Mean score across domains rendered from one latent."""
    independent: float
    """Mean score when every domain gets its own latent."""
    latents: int
    undefined: int

    def to_json(self) -> str:
        return json.dumps(value_serialize(self), indent=2) + "\n"

    def table(self) -> str:
        return "\n".join(
            [
                f"{'shared latent':<18} {self.aligned:.4f}",
                f"{'independent':<18} {self.independent:.4f}",
                f"{'latents':<18} {self.latents}",
                f"{'undefined pairs':<18} {self.undefined}",
            ]
        )


def _mean_score(panels: list[list[FloatArray]]) -> tuple[float, int]:
    reports = [alignment_score(images) for images in panels]
    scores = [report.score for report in reports if not math.isnan(report.score)]
    undefined = sum(len(report.undefined) for report in reports)
    return (float(np.mean(scores)) if scores else math.nan), undefined


def independent_alignment(model: PMGANModel, count: int, seed: int) -> float:
    """Alignment when each domain image comes from an independently drawn latent."""

    shape = (count, model.config.latent_dim)
    with no_record():
        per_domain = [
            model.infer(rng_fill(shape, generator(seed, "independent", k))).images for k in range(model.num_domains + 1)
        ]
    panels = [[_unit(ops.select(per_domain[k][k], i)) for k in range(model.num_domains + 1)] for i in range(count)]
    return _mean_score(panels)[0]


def alignment_eval(model: PMGANModel, count: int = 64, seed: int = 0) -> AlignmentEval:
    if count < 1:
        raise MetricInputError(f"count must be positive, got {count}")
    with no_record():
        images = model.infer(model.sample_latents(count, seed)).images
    panels = [[_unit(ops.select(image, i)) for image in images] for i in range(count)]
    aligned, undefined = _mean_score(panels)
    return AlignmentEval(aligned, independent_alignment(model, count, seed), count, undefined)
