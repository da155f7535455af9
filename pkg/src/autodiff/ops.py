# src/autodiff/ops.py
"""
Primitive tensor operations with their reverse-mode rules.

Broadcasting is deliberately narrow: operands must share a shape, or the
second operand is a scalar, or it is a 1-D bias along the channel axis
(rank-4 inputs) or the last axis (everything else). `expand` is the only
explicit way to broadcast size-1 axes.
"""
import builtins
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import NumericFaultError, ShapeError
from .tensor import Tensor, active_tape

Axis = Union[None, int, Tuple[int, ...]]


def _emit(op: str, out_data: np.ndarray, inputs: Tuple[Tensor, ...], backward_fn) -> Tensor:
    if not np.all(np.isfinite(out_data)):
        raise NumericFaultError(f"{op}: non-finite value in forward output", op=op)
    tape = active_tape()
    needs_grad = tape is not None and builtins.any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=needs_grad)
    if needs_grad:
        tape.record(op, inputs, out, backward_fn)
    return out


def _lift(value, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=like.dtype))


def _bias_axis(a_shape, b_shape) -> Optional[int]:
    if len(b_shape) != 1 or len(a_shape) < 2:
        return None
    axis = 1 if len(a_shape) == 4 else len(a_shape) - 1
    return axis if a_shape[axis] == b_shape[0] else None


def _operand_view(op: str, a: Tensor, b: Tensor):
    """Returns b's data shaped for numpy broadcasting and the axes its gradient is summed over."""
    if a.shape == b.shape:
        return b.data, None
    if b.size == 1 and b.ndim <= 1:
        return b.data.reshape(()), "all"
    axis = _bias_axis(a.shape, b.shape)
    if axis is not None:
        view = [1] * a.ndim
        view[axis] = b.shape[0]
        return b.data.reshape(view), tuple(i for i in range(a.ndim) if i != axis)
    raise ShapeError(op, a.shape, b.shape)


def _reduce_to(grad: np.ndarray, target: Tensor, axes) -> np.ndarray:
    if axes is None:
        return grad
    if axes == "all":
        return np.asarray(grad.sum()).reshape(target.shape)
    return grad.sum(axis=axes).reshape(target.shape)


# --- elementwise binary -------------------------------------------------------

def add(a: Tensor, b) -> Tensor:
    b = _lift(b, a)
    b_view, axes = _operand_view("add", a, b)

    def backward(g):
        return g, _reduce_to(g, b, axes)

    return _emit("add", a.data + b_view, (a, b), backward)


def sub(a: Tensor, b) -> Tensor:
    b = _lift(b, a)
    b_view, axes = _operand_view("sub", a, b)

    def backward(g):
        return g, _reduce_to(-g, b, axes)

    return _emit("sub", a.data - b_view, (a, b), backward)


def mul(a: Tensor, b) -> Tensor:
    b = _lift(b, a)
    b_view, axes = _operand_view("mul", a, b)

    def backward(g):
        return g * b_view, _reduce_to(g * a.data, b, axes)

    return _emit("mul", a.data * b_view, (a, b), backward)


def scalar_scale(x: Tensor, c: float) -> Tensor:
    c = float(c)
    return _emit("scalar_scale", x.data * c, (x,), lambda g: (g * c,))


# --- linear algebra -----------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """(..., M, K) @ (K, N), or batched (B, M, K) @ (B, K, N)."""
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError("matmul", a.shape, b.shape)
    if b.ndim == 2:
        k, n = b.shape

        def backward(g):
            ga = g @ b.data.T
            gb = a.data.reshape(-1, k).T @ g.reshape(-1, n)
            return ga, gb

        return _emit("matmul", a.data @ b.data, (a, b), backward)

    if a.ndim != 3 or b.ndim != 3 or a.shape[0] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape, detail="batched matmul needs equal rank-3 batches")

    def backward_batched(g):
        return g @ b.data.transpose(0, 2, 1), a.data.transpose(0, 2, 1) @ g

    return _emit("matmul", a.data @ b.data, (a, b), backward_batched)


def _windows(op: str, x: Tensor, kh: int, kw: int, stride: int, padding: int):
    if x.ndim != 4:
        raise ShapeError(op, x.shape, detail="input must be rank-4 (batch, channels, height, width)")
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x.data
    hp, wp = xp.shape[2], xp.shape[3]
    if hp < kh or wp < kw:
        raise ShapeError(op, x.shape, (kh, kw), detail="kernel larger than padded input")
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    return xp.shape, win


def _scatter_windows(dwin: np.ndarray, padded_shape, stride: int, padding: int, in_shape) -> np.ndarray:
    """Adjoint of `_windows`: dwin has shape (B, C, Ho, Wo, kh, kw)."""
    _, _, ho, wo, kh, kw = dwin.shape
    dxp = np.zeros(padded_shape, dtype=dwin.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i:i + stride * (ho - 1) + 1:stride, j:j + stride * (wo - 1) + 1:stride] += dwin[..., i, j]
    h, w = in_shape[2], in_shape[3]
    return dxp[:, :, padding:padding + h, padding:padding + w]


def conv2d(x: Tensor, w: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation of (B, C, H, W) with (O, C, kh, kw)."""
    if w.ndim != 4 or x.ndim != 4 or w.shape[1] != x.shape[1]:
        raise ShapeError("conv2d", x.shape, w.shape)
    out_c, in_c, kh, kw = w.shape
    padded_shape, win = _windows("conv2d", x, kh, kw, stride, padding)
    b, _, ho, wo = win.shape[:4]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(b * ho * wo, in_c * kh * kw)
    w_mat = w.data.reshape(out_c, -1)
    out = (cols @ w_mat.T).reshape(b, ho, wo, out_c).transpose(0, 3, 1, 2)

    def backward(g):
        g2 = g.transpose(0, 2, 3, 1).reshape(-1, out_c)
        gw = (g2.T @ cols).reshape(w.shape)
        dcols = (g2 @ w_mat).reshape(b, ho, wo, in_c, kh, kw).transpose(0, 3, 1, 2, 4, 5)
        gx = _scatter_windows(dcols, padded_shape, stride, padding, x.shape)
        return gx, gw

    return _emit("conv2d", np.ascontiguousarray(out), (x, w), backward)


def depthwise_conv2d(x: Tensor, w: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Per-channel cross-correlation of (B, C, H, W) with (C, 1, kh, kw)."""
    if w.ndim != 4 or x.ndim != 4 or w.shape[0] != x.shape[1] or w.shape[1] != 1:
        raise ShapeError("depthwise_conv2d", x.shape, w.shape)
    _, _, kh, kw = w.shape
    padded_shape, win = _windows("depthwise_conv2d", x, kh, kw, stride, padding)
    kernel = w.data[:, 0]
    out = np.einsum("bchwij,cij->bchw", win, kernel)

    def backward(g):
        gw = np.einsum("bchw,bchwij->cij", g, win)[:, None]
        dwin = np.einsum("bchw,cij->bchwij", g, kernel)
        gx = _scatter_windows(dwin, padded_shape, stride, padding, x.shape)
        return gx, gw

    return _emit("depthwise_conv2d", out, (x, w), backward)


# --- elementwise unary --------------------------------------------------------

def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return _emit("relu", np.where(mask, x.data, 0.0).astype(x.dtype), (x,), lambda g: (g * mask,))


def sigmoid(x: Tensor) -> Tensor:
    y = 0.5 * (np.tanh(0.5 * x.data) + 1.0)
    return _emit("sigmoid", y, (x,), lambda g: (g * y * (1.0 - y),))


def silu(x: Tensor) -> Tensor:
    s = 0.5 * (np.tanh(0.5 * x.data) + 1.0)
    y = x.data * s
    return _emit("silu", y, (x,), lambda g: (g * s * (1.0 + x.data * (1.0 - s)),))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _emit("tanh", y, (x,), lambda g: (g * (1.0 - y * y),))


def exp(x: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        y = np.exp(x.data)
    return _emit("exp", y, (x,), lambda g: (g * y,))


def log(x: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.log(x.data)
    return _emit("log", y, (x,), lambda g: (g / x.data,))


def power(x: Tensor, p: float) -> Tensor:
    p = float(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.power(x.data, p)
    return _emit("power", y, (x,), lambda g: (g * p * np.power(x.data, p - 1.0),))


def clip(x: Tensor, lo: Optional[float] = None, hi: Optional[float] = None) -> Tensor:
    y = np.clip(x.data, lo, hi)
    inside = np.ones(x.shape, dtype=bool)
    if lo is not None:
        inside &= x.data >= lo
    if hi is not None:
        inside &= x.data <= hi
    return _emit("clip", y, (x,), lambda g: (g * inside,))


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _emit("softmax", y, (x,), backward)


# --- reductions ---------------------------------------------------------------

def _normalize_axes(axis: Axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def sum(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, x.ndim)
    y = x.data.sum(axis=axes, keepdims=keepdims)

    def backward(g):
        g = g if keepdims else np.expand_dims(g, axes)
        return (np.broadcast_to(g, x.shape),)

    return _emit("sum", np.asarray(y), (x,), backward)


def mean(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, x.ndim)
    count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    y = x.data.mean(axis=axes, keepdims=keepdims)

    def backward(g):
        g = g if keepdims else np.expand_dims(g, axes)
        return (np.broadcast_to(g / count, x.shape),)

    return _emit("mean", np.asarray(y), (x,), backward)


def global_avg_pool(x: Tensor) -> Tensor:
    if x.ndim != 4:
        raise ShapeError("global_avg_pool", x.shape, detail="input must be rank-4")
    h, w = x.shape[2], x.shape[3]

    def backward(g):
        return (np.broadcast_to(g[:, :, None, None] / (h * w), x.shape),)

    return _emit("global_avg_pool", x.data.mean(axis=(2, 3)), (x,), backward)


# --- shape plumbing -----------------------------------------------------------

def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        y = x.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", x.shape, tuple(shape))
    return _emit("reshape", y, (x,), lambda g: (g.reshape(x.shape),))


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise ShapeError("transpose", x.shape, axes, detail="axes must be a permutation")
    inverse = tuple(int(i) for i in np.argsort(axes))
    return _emit("transpose", x.data.transpose(axes), (x,), lambda g: (g.transpose(inverse),))


def expand(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    if len(shape) != x.ndim or builtins.any(s != t and s != 1 for s, t in zip(x.shape, shape)):
        raise ShapeError("expand", x.shape, shape, detail="only size-1 axes may expand")
    axes = tuple(i for i, (s, t) in enumerate(zip(x.shape, shape)) if s != t)

    def backward(g):
        return (g.sum(axis=axes, keepdims=True),)

    return _emit("expand", np.broadcast_to(x.data, shape), (x,), backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = tuple(tensors)
    if not tensors:
        raise ShapeError("concat", detail="needs at least one tensor")
    ref = tensors[0]
    axis = axis % ref.ndim
    for t in tensors[1:]:
        if t.ndim != ref.ndim or builtins.any(
            s != r for i, (s, r) in enumerate(zip(t.shape, ref.shape)) if i != axis
        ):
            raise ShapeError("concat", ref.shape, t.shape)
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return _emit("concat", np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def slice_tensor(x: Tensor, key) -> Tensor:
    """Basic indexing only (ints, slices, Ellipsis)."""
    key = key if isinstance(key, tuple) else (key,)
    for k in key:
        if not (k is Ellipsis or isinstance(k, (int, np.integer, builtins.slice))):
            raise ShapeError("slice", x.shape, detail=f"unsupported index {k!r}")
    y = x.data[key]

    def backward(g):
        gx = np.zeros(x.shape, dtype=g.dtype)
        gx[key] = g
        return (gx,)

    return _emit("slice", np.array(y), (x,), backward)
