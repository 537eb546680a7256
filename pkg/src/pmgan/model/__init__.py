"""The PMGAN model and its inference-time algorithms."""

from __future__ import annotations

from .config import ModelConfig
from .core import CoreGenerator, SynthesisOutput
from .exception import ConvergenceError, ModelConfigError, ModelError, UnknownDomainError
from .invert import InversionResult, invert, mean_latent, translate
from .io import load_model, model_from_checkpoint, model_tensors, save_model
from .morphnet import MorphHead, MorphNet
from .pmgan import PARENT, Inference, PMGANModel
from .render import RenderHeads, RenderLayer
from .sefa import SefaResult, edit_transfer, sefa_directions, style_matrix

__all__ = [
    "PARENT",
    "ConvergenceError",
    "CoreGenerator",
    "Inference",
    "InversionResult",
    "ModelConfig",
    "ModelConfigError",
    "ModelError",
    "MorphHead",
    "MorphNet",
    "PMGANModel",
    "RenderHeads",
    "RenderLayer",
    "SefaResult",
    "SynthesisOutput",
    "UnknownDomainError",
    "edit_transfer",
    "invert",
    "load_model",
    "mean_latent",
    "model_from_checkpoint",
    "model_tensors",
    "save_model",
    "sefa_directions",
    "style_matrix",
    "translate",
]
