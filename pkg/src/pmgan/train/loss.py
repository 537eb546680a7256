"""Non-saturating logistic GAN losses and the R1 gradient penalty."""

from __future__ import annotations

from collections.abc import Callable

from pmgan.numeric import GradTape, Tensor, ops


def g_loss_nonsat(fake_logits: Tensor) -> Tensor:
    """mean softplus(-D(G(z)))"""
    return ops.mean(ops.softplus(ops.neg(fake_logits)))


def d_loss_logistic(real_logits: Tensor, fake_logits: Tensor) -> Tensor:
    """mean softplus(-D(x)) + mean softplus(D(G(z)))"""
    return ops.add(
        ops.mean(ops.softplus(ops.neg(real_logits))),
        ops.mean(ops.softplus(fake_logits)),
    )


def r1_penalty(discriminator: Callable[[Tensor], Tensor], real: Tensor, gamma: float) -> Tensor:
    """(gamma / 2) times the batch mean of the squared input-gradient norm at real samples.

    The input gradient is taken with `create_graph=True`, so when an outer tape
    watches the discriminator parameters the penalty can be differentiated
    with respect to them.
    """

    with GradTape() as tape:
        tape.watch(real)
        logits = discriminator(real)
        total = ops.sum(logits)
    grad = tape.gradient(total, [real], create_graph=True)[real]
    batch = real.shape[0]
    per_sample = ops.sum(ops.square(ops.reshape(grad, (batch, -1))), axis=1)
    return ops.scale(ops.mean(per_sample), gamma / 2)
