from __future__ import annotations

from collections.abc import Mapping
from typing import Any

from loguru import logger

from pmgan.nn import Checkpoint, CheckpointFormatError, CheckpointManifest, load_checkpoint, save_checkpoint
from pmgan.numeric import Tensor
from pmgan.utils.convert import value_deserialize, value_serialize
from pmgan.utils.types import PathLike

from .config import ModelConfig
from .pmgan import PMGANModel

MODEL_PREFIX = "model"
CONFIG_KEY = "model_config"


def model_tensors(model: PMGANModel) -> dict[str, Tensor]:
    return model.state_dict(MODEL_PREFIX)


def save_model(
    directory: PathLike,
    model: PMGANModel,
    *,
    extra_tensors: Mapping[str, Tensor] | None = None,
    metadata: Mapping[str, Any] | None = None,
) -> CheckpointManifest:
    """Write the model (and optionally training state) as one checkpoint directory."""

    tensors = model_tensors(model)
    if extra_tensors:
        tensors.update(extra_tensors)
    meta = {CONFIG_KEY: value_serialize(model.config), **(metadata or {})}
    return save_checkpoint(directory, tensors, aliases=model.parameter_aliases(MODEL_PREFIX), metadata=meta)


def model_from_checkpoint(checkpoint: Checkpoint) -> PMGANModel:
    raw = checkpoint.metadata.get(CONFIG_KEY)
    if raw is None:
        raise CheckpointFormatError(f"Checkpoint metadata lacks `{CONFIG_KEY}`")
    try:
        config = value_deserialize(raw, ModelConfig)
    except Exception as exc:
        raise CheckpointFormatError("Checkpoint holds an invalid model config") from exc
    model = PMGANModel.create(config)
    model.load_state_dict(checkpoint.tensors, MODEL_PREFIX)
    return model


def load_model(directory: PathLike) -> PMGANModel:
    model = model_from_checkpoint(load_checkpoint(directory))
    logger.debug("Loaded model with {} domains from {}", model.num_domains, directory)
    return model
