from __future__ import annotations

from collections.abc import Mapping

import numpy as np
from attrs import Factory, define

from pmgan.numeric import Tensor
from pmgan.utils.types import FloatArray

from .exception import OptimizerError
from .params import Parameter


@define
class AdamState:
    """First and second moments keyed by parameter name, plus the step count."""

    m: dict[str, FloatArray] = Factory(dict)
    v: dict[str, FloatArray] = Factory(dict)
    t: int = 0

    def tensors(self, prefix: str) -> dict[str, Tensor]:
        out = {f"{prefix}.m.{name}": Tensor(arr) for name, arr in self.m.items()}
        out.update({f"{prefix}.v.{name}": Tensor(arr) for name, arr in self.v.items()})
        return out

    @classmethod
    def from_tensors(cls, tensors: Mapping[str, Tensor], prefix: str, t: int) -> AdamState:
        state = cls(t=t)
        for key, value in tensors.items():
            for slot, store in (("m", state.m), ("v", state.v)):
                head = f"{prefix}.{slot}."
                if key.startswith(head):
                    store[key.removeprefix(head)] = np.array(value.data, dtype=np.float32)
        return state


def adam_step(
    params: Mapping[str, Parameter],
    grads: Mapping[str, Tensor],
    state: AdamState,
    *,
    lr: float,
    betas: tuple[float, float] = (0.0, 0.99),
    eps: float = 1e-8,
) -> AdamState:
    """Bias-corrected Adam update of every parameter that has a gradient.

    Parameters without an entry in `grads` are left untouched. Moments are
    kept in float32 so a checkpointed state resumes bit-exactly.
    """

    beta1, beta2 = betas
    t = state.t + 1
    m, v = dict(state.m), dict(state.v)
    for name, grad in grads.items():
        if name not in params:
            raise OptimizerError(f"Gradient for unknown parameter `{name}`")
        param = params[name]
        if grad.shape != param.shape:
            raise OptimizerError(f"Gradient shape {grad.shape} does not match `{name}` {param.shape}")
        g = np.asarray(grad.data, dtype=np.float32)
        m_prev = m.get(name, np.zeros_like(g))
        v_prev = v.get(name, np.zeros_like(g))
        if m_prev.shape != g.shape:
            raise OptimizerError(f"Optimizer state for `{name}` has shape {m_prev.shape}")
        m[name] = (beta1 * m_prev + (1.0 - beta1) * g).astype(np.float32)
        v[name] = (beta2 * v_prev + (1.0 - beta2) * g * g).astype(np.float32)
        m_hat = m[name] / np.float32(1.0 - beta1**t)
        v_hat = v[name] / np.float32(1.0 - beta2**t)
        update = np.float32(lr) * m_hat / (np.sqrt(v_hat) + np.float32(eps))
        param.assign(Tensor(param.value.data - update))
    return AdamState(m, v, t)
