"""Multi-domain adversarial training."""

from __future__ import annotations

from pmgan.nn import AdamState, adam_step

from .config import TrainConfig
from .data import TrainingData
from .discriminator import Discriminator
from .exception import FreezeError, NonFiniteLossError, TrainDataError, TrainError
from .freeze import FrozenParameters, freeze, freeze_layers
from .loop import CHECKPOINT_DIR, LOG_NAME, StepReport, Trainer, TrainState, log_fields, train_step
from .loss import d_loss_logistic, g_loss_nonsat, r1_penalty
from .weights import domain_loss_weights

__all__ = [
    "CHECKPOINT_DIR",
    "LOG_NAME",
    "AdamState",
    "Discriminator",
    "FreezeError",
    "FrozenParameters",
    "NonFiniteLossError",
    "StepReport",
    "TrainConfig",
    "TrainDataError",
    "TrainError",
    "TrainState",
    "Trainer",
    "TrainingData",
    "adam_step",
    "d_loss_logistic",
    "domain_loss_weights",
    "freeze",
    "freeze_layers",
    "g_loss_nonsat",
    "log_fields",
    "r1_penalty",
    "train_step",
]
