"""Metrics, gradient verification and model evaluation reports."""

from __future__ import annotations

from .alignment import AlignmentReport, PairDistance, alignment_score, centroid, foreground_mask
from .eval import (
    AlignmentEval,
    SegTransferReport,
    SegTransferRow,
    alignment_eval,
    independent_alignment,
    seg_transfer_eval,
    transfer_miou,
)
from .exception import BenchError, MetricInputError
from .gradcheck import (
    TINY_MODEL,
    CaseResult,
    GradCheckCase,
    GradCheckReport,
    GradCheckRegistry,
    check_case,
    default_registry,
    grad_check_suite,
)
from .iou import IoUReport, miou

__all__ = [
    "TINY_MODEL",
    "AlignmentEval",
    "AlignmentReport",
    "BenchError",
    "CaseResult",
    "GradCheckCase",
    "GradCheckRegistry",
    "GradCheckReport",
    "IoUReport",
    "MetricInputError",
    "PairDistance",
    "SegTransferReport",
    "SegTransferRow",
    "alignment_eval",
    "alignment_score",
    "centroid",
    "check_case",
    "default_registry",
    "foreground_mask",
    "grad_check_suite",
    "independent_alignment",
    "miou",
    "seg_transfer_eval",
    "transfer_miou",
]
