from __future__ import annotations

import math
from typing import Any

from attrs import frozen
from loguru import logger
from tqdm import tqdm

from pmgan import env
from pmgan.nn import AdamState, Parameter, adam_step
from pmgan.numeric import GradTape, Tensor, as_tensor, no_record, ops

from .exception import ModelError
from .pmgan import PMGANModel

DEFAULT_STEPS = 250
DEFAULT_LR = 0.1


@frozen(eq=False)
class InversionResult:
    w: Tensor
    """Latent with the lowest recorded loss."""
    loss: float
    initial_loss: float
    history: tuple[float, ...]


def mean_latent(model: PMGANModel, samples: int = 256, seed: int = 0) -> Tensor:
    with no_record():
        w = model.mapping(model.sample_latents(samples, seed))
    return ops.mean(w, axis=0, keepdims=True)


def _objective(
    model: PMGANModel, w: Tensor, target: Tensor, domain: int, anchor: Tensor, latent_weight: float
) -> Tensor:
    loss = ops.mean(ops.square(ops.sub(model.render(w, domain), target)))
    if latent_weight:
        loss = ops.add(loss, ops.scale(ops.mean(ops.square(ops.sub(w, anchor))), latent_weight))
    return loss


def invert(
    model: PMGANModel,
    target: Tensor,
    domain: int,
    *,
    steps: int = DEFAULT_STEPS,
    lr: float = DEFAULT_LR,
    init_w: Tensor | None = None,
    latent_weight: float = 0.0,
    betas: tuple[float, float] = (0.9, 0.999),
) -> InversionResult:
    """Optimize a w latent so that `render(w, domain)` matches `target` in pixel MSE.

    `target` is a model-space image (3, S, S) or (1, 3, S, S) in [-1, 1].
    Without `init_w` the search starts from the mean latent. An optional L2
    term pulls w towards its starting point.
    """

    model.check_domain(domain, allow_parent=True)
    target = as_tensor(target)
    size = model.image_size
    if target.ndim == 3:
        target = ops.reshape(target, (1, *target.shape))
    if target.shape != (1, 3, size, size):
        raise ModelError(f"Target must be (3, {size}, {size}), got {target.shape}")

    start = mean_latent(model) if init_w is None else as_tensor(init_w)
    latent = Parameter(start)
    state = AdamState()
    best_w, best_loss = start, math.inf
    history: list[float] = []

    for _ in tqdm(range(steps), desc="invert", leave=False, disable=env.disable_progress()):
        with GradTape() as tape:
            tape.watch(latent.value)
            loss = _objective(model, latent.value, target, domain, start, latent_weight)
        value = loss.item()
        history.append(value)
        if value < best_loss:
            best_w, best_loss = latent.value, value
        grad = tape.gradient(loss, [latent.value])[latent.value]
        state = adam_step({"w": latent}, {"w": grad}, state, lr=lr, betas=betas)

    with no_record():
        final = _objective(model, latent.value, target, domain, start, latent_weight).item()
    history.append(final)
    if final < best_loss:
        best_w, best_loss = latent.value, final

    logger.debug("Inversion: loss {:.3e} -> {:.3e} over {} steps", history[0], best_loss, steps)
    return InversionResult(best_w, best_loss, history[0], tuple(history))


def translate(
    model: PMGANModel,
    image: Tensor,
    source_domain: int,
    **kwargs: Any,
) -> tuple[tuple[Tensor, ...], InversionResult]:
    """Invert an image of one domain and render the latent in every domain."""

    result = invert(model, image, source_domain, **kwargs)
    with no_record():
        images = model.render_all(result.w)
    return images, result
