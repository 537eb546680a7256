"""Differentiable primitives.

Every primitive computes its forward value with numpy, wraps it in a `Tensor`
and registers a backward closure on the active tapes. Backward closures are
written with the same primitives wherever possible so that second-order
gradients (needed by the R1 penalty) come for free.
"""

from __future__ import annotations

from collections.abc import Sequence
from functools import cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from pmgan.utils.types import FloatArray, ResampleMode, Shape

from .exception import ShapeError
from .tape import record
from .tensor import Operand, Tensor, as_tensor, current_dtype

type Axis = int | tuple[int, ...] | None

LEAKY_SLOPE = 0.2


# --- shape helpers -----------------------------------------------------------


def _normalize_axes(axis: Axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else axis
    return tuple(sorted(a % ndim for a in axes))


def _sum_to(arr: FloatArray, shape: Shape) -> FloatArray:
    lead = arr.ndim - len(shape)
    if lead < 0:
        raise ShapeError(f"Cannot reduce shape {arr.shape} to {shape}")
    axes = tuple(range(lead)) + tuple(
        lead + i for i, dim in enumerate(shape) if dim == 1 and arr.shape[lead + i] != 1
    )
    if axes:
        arr = np.sum(arr, axis=axes, dtype=np.float64, keepdims=True)
    return arr.reshape(shape)


# --- elementwise arithmetic --------------------------------------------------


def add(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data)

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (
            sum_to_shape(g, a.shape) if needs[0] else None,
            sum_to_shape(g, b.shape) if needs[1] else None,
        )

    return record("add", (a, b), out, backward)


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data - b.data)

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (
            sum_to_shape(g, a.shape) if needs[0] else None,
            sum_to_shape(scale(g, -1.0), b.shape) if needs[1] else None,
        )

    return record("sub", (a, b), out, backward)


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data)

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (
            sum_to_shape(mul(g, b), a.shape) if needs[0] else None,
            sum_to_shape(mul(g, a), b.shape) if needs[1] else None,
        )

    return record("mul", (a, b), out, backward)


def scale(a: Operand, factor: float) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data * factor)

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (scale(g, factor),)

    return record("scale", (a,), out, backward)


def neg(a: Operand) -> Tensor:
    return scale(a, -1.0)


def square(a: Operand) -> Tensor:
    a = as_tensor(a)
    return mul(a, a)


def lerp(a: Operand, b: Operand, t: float) -> Tensor:
    """(1 - t) a + t b; exact at both endpoints."""
    return add(scale(a, 1.0 - t), scale(b, t))


def rsqrt(a: Operand) -> Tensor:
    a = as_tensor(a)
    out = Tensor(1.0 / np.sqrt(a.data))

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (mul(g, scale(mul(square(out), out), -0.5)),)

    return record("rsqrt", (a,), out, backward)


# --- activations -------------------------------------------------------------


def leaky_relu(x: Operand, slope: float = LEAKY_SLOPE) -> Tensor:
    x = as_tensor(x)
    mask = Tensor(np.where(x.data > 0, 1.0, slope))
    out = Tensor(x.data * mask.data)

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (mul(g, mask),)

    return record("leaky_relu", (x,), out, backward)


def tanh(x: Operand) -> Tensor:
    x = as_tensor(x)
    out = Tensor(np.tanh(x.data))

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (mul(g, sub(1.0, square(out))),)

    return record("tanh", (x,), out, backward)


def sigmoid(x: Operand) -> Tensor:
    x = as_tensor(x)
    out = Tensor(0.5 * (np.tanh(0.5 * x.data) + 1.0))

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (mul(g, mul(out, sub(1.0, out))),)

    return record("sigmoid", (x,), out, backward)


def softplus(x: Operand) -> Tensor:
    x = as_tensor(x)
    out = Tensor(np.logaddexp(0.0, x.data))

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (mul(g, sigmoid(x)),)

    return record("softplus", (x,), out, backward)


# --- linear algebra and reshaping --------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul needs (m, k) @ (k, n), got {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data)

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (
            matmul(g, transpose(b)) if needs[0] else None,
            matmul(transpose(a), g) if needs[1] else None,
        )

    return record("matmul", (a, b), out, backward)


def transpose(a: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    order = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    inverse = tuple(int(i) for i in np.argsort(order))
    out = Tensor(np.transpose(a.data, order))

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (transpose(g, inverse),)

    return record("transpose", (a,), out, backward)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = Tensor(a.data.reshape(tuple(shape)))
    except ValueError as exc:
        raise ShapeError(f"Cannot reshape {a.shape} to {tuple(shape)}") from exc

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (reshape(g, a.shape),)

    return record("reshape", (a,), out, backward)


def sum(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)
    out = Tensor(np.sum(a.data, axis=axes, dtype=np.float64, keepdims=keepdims))
    kept = tuple(1 if i in axes else dim for i, dim in enumerate(a.shape))

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (broadcast_to(reshape(g, kept), a.shape),)

    return record("sum", (a,), out, backward)


def mean(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[i] for i in axes]))
    return scale(sum(a, axes, keepdims), 1.0 / count)


def broadcast_to(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    if a.shape == shape:
        return a
    try:
        out = Tensor(np.broadcast_to(a.data, shape))
    except ValueError as exc:
        raise ShapeError(f"Cannot broadcast {a.shape} to {shape}") from exc

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (sum_to_shape(g, a.shape),)

    return record("broadcast_to", (a,), out, backward)


def sum_to_shape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    if a.shape == shape:
        return a
    out = Tensor(_sum_to(a.data, shape))

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (broadcast_to(g, a.shape),)

    return record("sum_to_shape", (a,), out, backward)


def slice_axis(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    axis %= a.ndim
    index = [slice(None)] * a.ndim
    index[axis] = slice(start, stop)
    out = Tensor(a.data[tuple(index)])

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (pad_axis(g, axis, start, a.shape[axis] - stop),)

    return record("slice_axis", (a,), out, backward)


def pad_axis(a: Tensor, axis: int, before: int, after: int) -> Tensor:
    axis %= a.ndim
    widths = [(0, 0)] * a.ndim
    widths[axis] = (before, after)
    out = Tensor(np.pad(a.data, widths))

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (slice_axis(g, axis, before, before + a.shape[axis]),)

    return record("pad_axis", (a,), out, backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    axis %= tensors[0].ndim
    try:
        out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    except ValueError as exc:
        raise ShapeError(f"Cannot concatenate shapes {[t.shape for t in tensors]}") from exc
    bounds = np.cumsum([0, *(t.shape[axis] for t in tensors)])

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return tuple(
            slice_axis(g, axis, int(lo), int(hi)) if need else None
            for lo, hi, need in zip(bounds[:-1], bounds[1:], needs, strict=True)
        )

    return record("concat", tuple(tensors), out, backward)


def select(a: Tensor, index: int, axis: int = 0) -> Tensor:
    """Pick one entry along an axis and drop that axis."""
    axis %= a.ndim
    picked = slice_axis(a, axis, index, index + 1)
    return reshape(picked, a.shape[:axis] + a.shape[axis + 1 :])


def take(a: Tensor, indices: Sequence[int], axis: int = 0) -> Tensor:
    """Gather entries along an axis; repeated indices accumulate in the backward pass."""
    axis %= a.ndim
    index = np.asarray(indices, dtype=np.int64)
    if index.size and (index.min() < -a.shape[axis] or index.max() >= a.shape[axis]):
        raise ShapeError(f"take indices out of range for axis of size {a.shape[axis]}")
    out = Tensor(np.take(a.data, index, axis=axis))

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        grad = np.zeros(a.shape, dtype=np.float64)
        moved = np.moveaxis(grad, axis, 0)
        np.add.at(moved, index, np.moveaxis(g.data.astype(np.float64), axis, 0))
        return (Tensor(grad),)

    return record("take", (a,), out, backward, higher_order=False)


# --- convolution -------------------------------------------------------------


def _padded(data: FloatArray, padding: int) -> FloatArray:
    if padding == 0:
        return data
    return np.pad(data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def _windows(padded: FloatArray, kernel: int, stride: int) -> FloatArray:
    """(N, C, H', W', k, k) view of every kernel window."""
    return sliding_window_view(padded, (kernel, kernel), axis=(2, 3))[:, :, ::stride, ::stride]


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    """Floor semantics: `(size + 2 * padding - kernel) // stride + 1`."""
    return (size + 2 * padding - kernel) // stride + 1


def conv2d(x: Tensor, weight: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation of (N, C, H, W) with (O, C, k, k)."""

    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError(f"conv2d needs rank-4 operands, got {x.shape} and {weight.shape}")
    if x.shape[1] != weight.shape[1]:
        raise ShapeError(f"conv2d channel mismatch: input {x.shape[1]}, kernel {weight.shape[1]}")
    kernel = weight.shape[2]
    if min(x.shape[2:]) + 2 * padding < kernel:
        raise ShapeError(f"Input {x.shape} too small for kernel {kernel} with padding {padding}")

    cols = _windows(_padded(x.data, padding), kernel, stride)
    out = Tensor(np.tensordot(cols, weight.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2))

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (
            conv2d_input_grad(g, weight, x.shape, stride, padding) if needs[0] else None,
            conv2d_weight_grad(x, g, weight.shape, stride, padding) if needs[1] else None,
        )

    return record("conv2d", (x, weight), out, backward)


def conv2d_input_grad(
    g: Tensor, weight: Tensor, input_shape: Shape, stride: int, padding: int
) -> Tensor:
    """Adjoint of `conv2d` with respect to its input (a transposed convolution)."""

    n, c, h, w = input_shape
    kernel = weight.shape[2]
    out_h, out_w = g.shape[2:]
    cols = np.tensordot(g.data, weight.data, axes=([1], [0]))  # (N, H', W', C, k, k)
    padded = np.zeros((n, c, h + 2 * padding, w + 2 * padding), dtype=cols.dtype)
    for i in range(kernel):
        for j in range(kernel):
            padded[
                :, :, i : i + stride * (out_h - 1) + 1 : stride, j : j + stride * (out_w - 1) + 1 : stride
            ] += cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    out = Tensor(padded[:, :, padding : padding + h, padding : padding + w])

    def backward(gg: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (
            conv2d(gg, weight, stride, padding) if needs[0] else None,
            conv2d_weight_grad(gg, g, weight.shape, stride, padding) if needs[1] else None,
        )

    return record("conv2d_input_grad", (g, weight), out, backward)


def conv2d_weight_grad(
    x: Tensor, g: Tensor, weight_shape: Shape, stride: int, padding: int
) -> Tensor:
    """Adjoint of `conv2d` with respect to its kernel."""

    kernel = weight_shape[2]
    out_h, out_w = g.shape[2:]
    cols = _windows(_padded(x.data, padding), kernel, stride)[:, :, :out_h, :out_w]
    out = Tensor(np.tensordot(g.data, cols, axes=([0, 2, 3], [0, 2, 3])))

    def backward(gg: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (
            conv2d_input_grad(g, gg, x.shape, stride, padding) if needs[0] else None,
            conv2d(x, gg, stride, padding) if needs[1] else None,
        )

    return record("conv2d_weight_grad", (x, g), out, backward)


# --- resampling --------------------------------------------------------------


@cache
def interpolation_matrix(size_in: int, size_out: int, mode: ResampleMode = "bilinear") -> FloatArray:
    """(size_out, size_in) resampling matrix along one axis.

    Bilinear is corner-aligned: output index 0 maps to input 0 and the last
    output index maps to the last input. Nearest duplicates source samples.
    """

    matrix = np.zeros((size_out, size_in), dtype=np.float64)
    match mode:
        case "bilinear":
            if size_in == 1 or size_out == 1:
                matrix[:, 0] = 1.0
            else:
                pos = np.arange(size_out) * (size_in - 1) / (size_out - 1)
                lo = np.minimum(np.floor(pos).astype(np.int64), size_in - 2)
                frac = pos - lo
                rows = np.arange(size_out)
                matrix[rows, lo] += 1.0 - frac
                matrix[rows, lo + 1] += frac
        case "nearest":
            src = np.arange(size_out) * size_in // size_out
            matrix[np.arange(size_out), src] = 1.0
        case _:
            raise ValueError(f"Unknown resample mode: {mode}")
    matrix.setflags(write=False)
    return matrix


def separable_resample(x: Tensor, rows: FloatArray, cols: FloatArray) -> Tensor:
    """Apply `rows` along axis -2 and `cols` along axis -1 (computed in float64)."""

    wide = x.data.astype(np.float64)
    out = Tensor(np.matmul(np.matmul(rows, wide), cols.T))

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        return (separable_resample(g, rows.T, cols.T),)

    return record("separable_resample", (x,), out, backward)


def resize(x: Tensor, size: tuple[int, int], mode: ResampleMode = "bilinear") -> Tensor:
    """Resize the last two axes of `x` to `size`."""

    height, width = x.shape[-2:]
    if (height, width) == tuple(size):
        return x
    return separable_resample(
        x,
        interpolation_matrix(height, size[0], mode),
        interpolation_matrix(width, size[1], mode),
    )


def upsample(x: Tensor, factor: int = 2, mode: ResampleMode = "bilinear") -> Tensor:
    height, width = x.shape[-2:]
    return resize(x, (height * factor, width * factor), mode)


# --- grid sampling -----------------------------------------------------------


def identity_axis(size: int, dtype: np.dtype | None = None) -> FloatArray:
    """Corner-aligned normalized coordinates `-1 + 2 i / (size - 1)`."""
    if size == 1:
        return np.zeros(1, dtype=dtype or current_dtype())
    coords = -1.0 + 2.0 * np.arange(size, dtype=np.float64) / (size - 1)
    return coords.astype(dtype or current_dtype())


def _pixel_coords(grid: FloatArray, src_h: int, src_w: int) -> tuple[FloatArray, FloatArray]:
    """Unnormalize grid coordinates to source pixel units in float64.

    When the grid matches the source size, coordinates are taken relative to
    the identity grid, so identity sampling lands exactly on integer sites.
    """

    out_h, out_w = grid.shape[1:3]
    gx = grid[..., 0].astype(np.float64)
    gy = grid[..., 1].astype(np.float64)
    if (out_h, out_w) == (src_h, src_w):
        base_x = identity_axis(src_w, grid.dtype).astype(np.float64)
        base_y = identity_axis(src_h, grid.dtype).astype(np.float64)
        px = np.arange(src_w) + (gx - base_x[None, None, :]) * ((src_w - 1) / 2)
        py = np.arange(src_h)[:, None] + (gy - base_y[None, :, None]) * ((src_h - 1) / 2)
        return px, py
    return (gx + 1.0) * ((src_w - 1) / 2), (gy + 1.0) * ((src_h - 1) / 2)


def grid_sample(source: Tensor, grid: Tensor) -> Tensor:
    """Bilinear gather of (N, C, Hs, Ws) at the (N, Ho, Wo, 2) normalized grid.

    Corners outside the source contribute zero, so samples fade out within
    one pixel of the border. Differentiable once with respect to both inputs.
    """

    if source.ndim != 4 or grid.ndim != 4 or grid.shape[-1] != 2 or grid.shape[0] != source.shape[0]:
        raise ShapeError(f"grid_sample needs (N, C, H, W) and (N, H, W, 2), got {source.shape} and {grid.shape}")
    n, c, src_h, src_w = source.shape
    out_h, out_w = grid.shape[1:3]
    px, py = _pixel_coords(grid.data, src_h, src_w)
    x0 = np.floor(px)
    y0 = np.floor(py)
    fx = px - x0
    fy = py - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    flat = source.data.astype(np.float64).reshape(n, c, src_h * src_w)
    corners = []
    for dy, dx in ((0, 0), (0, 1), (1, 0), (1, 1)):
        xi, yi = x0 + dx, y0 + dy
        valid = (xi >= 0) & (xi < src_w) & (yi >= 0) & (yi < src_h)
        index = np.where(valid, yi * src_w + xi, 0).reshape(n, 1, out_h * out_w)
        values = np.take_along_axis(flat, np.broadcast_to(index, (n, c, out_h * out_w)), axis=2)
        values = values.reshape(n, c, out_h, out_w) * valid[:, None]
        wx = fx if dx else 1.0 - fx
        wy = fy if dy else 1.0 - fy
        corners.append((index, valid, values, wx * wy))

    out = Tensor(np.sum([values * weight[:, None] for _, _, values, weight in corners], axis=0))

    def backward(g: Tensor, needs: tuple[bool, ...]) -> tuple[Tensor | None, ...]:
        upstream = g.data.astype(np.float64)
        grad_source = grad_grid = None
        if needs[0]:
            base = (np.arange(n)[:, None, None] * c + np.arange(c)[None, :, None]) * (src_h * src_w)
            scattered = np.zeros(n * c * src_h * src_w, dtype=np.float64)
            for index, valid, _, weight in corners:
                contrib = upstream * (weight * valid)[:, None]
                scattered += np.bincount(
                    (base + index).reshape(-1),
                    weights=contrib.reshape(-1),
                    minlength=scattered.size,
                )
            grad_source = Tensor(scattered.reshape(source.shape))
        if needs[1]:
            v00, v01, v10, v11 = (values for _, _, values, _ in corners)
            d_px = np.sum(upstream * ((1.0 - fy)[:, None] * (v01 - v00) + fy[:, None] * (v11 - v10)), axis=1)
            d_py = np.sum(upstream * ((1.0 - fx)[:, None] * (v10 - v00) + fx[:, None] * (v11 - v01)), axis=1)
            grad_grid = Tensor(np.stack([d_px * ((src_w - 1) / 2), d_py * ((src_h - 1) / 2)], axis=-1))
        return grad_source, grad_grid

    return record("grid_sample", (source, grid), out, backward, higher_order=False)
