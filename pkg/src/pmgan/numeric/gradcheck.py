from __future__ import annotations

import math
from collections.abc import Callable, Iterable

import numpy as np

from pmgan.utils.types import FloatArray

from .exception import FiniteDifferenceError, NonFiniteError
from .tape import no_record
from .tensor import Tensor

type ScalarFn = Callable[[Tensor], Tensor | float]


def _evaluate(f: ScalarFn, data: FloatArray) -> float:
    try:
        value = f(Tensor(data))
    except NonFiniteError as exc:
        raise FiniteDifferenceError("finite_diff_grad", "Function evaluation is not finite") from exc
    result = value.item() if isinstance(value, Tensor) else float(value)
    if not math.isfinite(result):
        raise FiniteDifferenceError("finite_diff_grad", f"Function returned {result}")
    return result


def finite_diff_grad(
    f: ScalarFn,
    x: Tensor,
    step: float = 1e-3,
    *,
    indices: Iterable[int] | None = None,
) -> Tensor:
    """Central-difference estimate of the gradient of scalar `f` at `x`.

    The divisor is the actually representable perturbation width, which keeps
    float32 checks honest. With `indices`, only those flat coordinates are
    estimated and the rest are left at zero.
    """

    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")

    flat = x.data.reshape(-1)
    grad = np.zeros(flat.size, dtype=np.float64)
    targets = range(flat.size) if indices is None else indices
    with no_record():
        for i in targets:
            plus = flat.copy()
            minus = flat.copy()
            plus[i] += step
            minus[i] -= step
            hi = _evaluate(f, plus.reshape(x.shape))
            lo = _evaluate(f, minus.reshape(x.shape))
            grad[i] = (hi - lo) / (float(plus[i]) - float(minus[i]))
    return Tensor(grad.reshape(x.shape))


def relative_error(actual: Tensor | FloatArray, expected: Tensor | FloatArray, floor: float = 1e-12) -> float:
    """Norm-wise relative error `|a - e| / max(|a|, |e|)`."""

    a = np.asarray(actual.data if isinstance(actual, Tensor) else actual, dtype=np.float64)
    e = np.asarray(expected.data if isinstance(expected, Tensor) else expected, dtype=np.float64)
    denom = max(float(np.linalg.norm(a)), float(np.linalg.norm(e)), floor)
    return float(np.linalg.norm(a - e)) / denom
