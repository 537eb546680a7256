"""Layers, parameters, the Adam optimizer and checkpoint directories."""

from __future__ import annotations

from .checkpoint import (
    CHECKPOINT_VERSION,
    MANIFEST_NAME,
    Checkpoint,
    CheckpointManifest,
    content_hash,
    load_checkpoint,
    read_manifest,
    save_checkpoint,
)
from .exception import (
    CheckpointError,
    CheckpointFormatError,
    CheckpointVersionError,
    LayerError,
    OptimizerError,
)
from .functional import leaky_relu, tanh, upsample
from .layers import Conv2d, Linear, ModulatedConv2d, effective_kernel
from .optim import AdamState, adam_step
from .params import Module, Parameter, copy_module, lerp_modules, map_parameters

__all__ = [
    "CHECKPOINT_VERSION",
    "MANIFEST_NAME",
    "AdamState",
    "Checkpoint",
    "CheckpointError",
    "CheckpointFormatError",
    "CheckpointManifest",
    "CheckpointVersionError",
    "Conv2d",
    "LayerError",
    "Linear",
    "ModulatedConv2d",
    "Module",
    "OptimizerError",
    "Parameter",
    "adam_step",
    "content_hash",
    "copy_module",
    "effective_kernel",
    "leaky_relu",
    "lerp_modules",
    "load_checkpoint",
    "map_parameters",
    "read_manifest",
    "save_checkpoint",
    "tanh",
    "upsample",
]
