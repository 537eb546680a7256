"""Closed-form edit directions from the style projections.

The directions are the top eigenvectors of A^T A where A stacks the style
weight matrices (rows normalized). They are found by power iteration with
deflation; a dense eigensolver is only used as a test oracle.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from attrs import frozen
from loguru import logger
from tenacity import RetryCallState, Retrying, retry_if_exception_type, stop_after_attempt

from pmgan.numeric import Tensor, generator, ops
from pmgan.utils.types import FloatArray

from .exception import ConvergenceError, ModelError
from .pmgan import PMGANModel

TOLERANCE = 1e-8
MAX_ITERATIONS = 10_000
RESTARTS = 3


@frozen(eq=False)
class SefaResult:
    directions: FloatArray
    """(k, n) orthonormal rows, ordered by eigenvalue."""
    eigenvalues: FloatArray
    """(k,) non-increasing."""


def style_matrix(model: PMGANModel, layers: Sequence[str] | None = None) -> FloatArray:
    """Stack the chosen style projections into A of shape (sum of channels, latent dim).

    Each row (one output channel's projection) is normalized to unit length.
    """

    available = model.core.style_layers()
    names = list(available) if not layers else list(layers)
    unknown = [name for name in names if name not in available]
    if unknown:
        raise ModelError(f"Unknown style layers {unknown}; available: {list(available)}")
    weights = np.concatenate([available[name].weight.value.data.astype(np.float64) for name in names], axis=0)
    return weights / np.linalg.norm(weights, axis=1, keepdims=True)


def _orthogonalize(vector: FloatArray, basis: Sequence[FloatArray]) -> FloatArray:
    for b in basis:
        vector = vector - (b @ vector) * b
    return vector


def _power_iteration(
    gram: FloatArray,
    found: Sequence[FloatArray],
    rng: np.random.Generator,
    tol: float,
    max_iter: int,
) -> tuple[FloatArray, float]:
    n = gram.shape[0]
    scale = max(float(np.linalg.norm(gram)), 1.0)
    vector = _orthogonalize(rng.standard_normal(n), found)
    vector /= np.linalg.norm(vector)
    residual = np.inf
    for _ in range(max_iter):
        nxt = _orthogonalize(gram @ vector, found)
        norm = float(np.linalg.norm(nxt))
        if norm <= 1e-14 * scale:
            # remaining spectrum is zero; any orthogonal unit vector is an eigenvector
            return vector, 0.0
        nxt /= norm
        residual = float(np.linalg.norm(nxt - vector))
        vector = nxt
        if residual < tol:
            return vector, float(vector @ gram @ vector)
    raise ConvergenceError(max_iter, residual)


def _log_restart(state: RetryCallState) -> None:
    logger.warning("Power iteration did not converge (attempt {}), restarting", state.attempt_number)


def sefa_directions(
    matrix: FloatArray,
    count: int,
    *,
    tol: float = TOLERANCE,
    max_iter: int = MAX_ITERATIONS,
    seed: int = 0,
) -> SefaResult:
    """Top-`count` eigenvectors of `matrix^T matrix` by power iteration with deflation.

    Each direction gets a few restarts from fresh random vectors before the
    `ConvergenceError` is raised. Signs are fixed so that the largest-magnitude
    component of each direction is positive.
    """

    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2:
        raise ModelError(f"Expected a 2-D matrix, got shape {a.shape}")
    n = a.shape[1]
    if not 1 <= count <= n:
        raise ModelError(f"count must lie in [1, {n}], got {count}")

    gram = a.T @ a
    deflated = gram.copy()
    vectors: list[FloatArray] = []
    values: list[float] = []
    for index in range(count):
        for attempt in Retrying(
            stop=stop_after_attempt(RESTARTS),
            retry=retry_if_exception_type(ConvergenceError),
            after=_log_restart,
            reraise=True,
        ):
            with attempt:
                rng = generator(seed, "sefa", index, attempt.retry_state.attempt_number)
                vector, _ = _power_iteration(deflated, vectors, rng, tol, max_iter)
        vector = _orthogonalize(vector, vectors)
        vector /= np.linalg.norm(vector)
        value = float(vector @ gram @ vector)
        deflated -= value * np.outer(vector, vector)
        vectors.append(vector)
        values.append(value)
        logger.debug("Direction {} has eigenvalue {:.6g}", index, value)

    order = np.argsort(-np.asarray(values), kind="stable")
    directions = np.stack([vectors[i] for i in order])
    signs = np.sign(directions[np.arange(count), np.argmax(np.abs(directions), axis=1)])
    return SefaResult(directions * signs[:, None], np.asarray(values)[order])


def edit_transfer(model: PMGANModel, w: Tensor, direction: FloatArray, alpha: float) -> tuple[Tensor, ...]:
    """Render `w + alpha * direction` in every domain (parent last)."""

    shift = Tensor(np.broadcast_to(alpha * np.asarray(direction), w.shape))
    return model.render_all(ops.add(w, shift))
