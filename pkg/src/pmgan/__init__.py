"""Desk-scale multi-domain GAN with learned per-domain morph maps.

One shared generator produces multi-level features; per domain, a learned
morph map warps those features before a domain-specific render head turns
them into an image. Samples of all domains rendered from one latent are
aligned, so masks and edits transfer between domains.

Example:
    ```python
    from pmgan import PMGANModel, ModelConfig

    model = PMGANModel.create(ModelConfig(num_domains=2))
    out = model.infer(model.sample_latents(4, seed=0))
    out.images   # domain 1, domain 2, parent
    out.maps     # one morph map per domain
    ```
"""

from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version

from loguru import logger

from .exception import PMGANError
from .model import PARENT, ModelConfig, PMGANModel, load_model, save_model
from .train import Trainer, TrainConfig, TrainingData

try:
    __version__ = version("polymorph-gan")
except PackageNotFoundError:
    __version__ = "0.0.0"

logger.disable(__name__)


def enable_logging() -> None:
    logger.enable(__name__)


def disable_logging() -> None:
    logger.disable(__name__)


# pdoc configuration
__docformat__ = "google"
__pdoc__ = {
    "logger": False,
}

__all__ = [
    "PARENT",
    "ModelConfig",
    "PMGANError",
    "PMGANModel",
    "TrainConfig",
    "Trainer",
    "TrainingData",
    "__version__",
    "disable_logging",
    "enable_logging",
    "load_model",
    "save_model",
]
