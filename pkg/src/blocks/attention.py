# src/blocks/attention.py
from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor, ops
from ..errors import ConfigurationError, ShapeError
from .params import ParamGroup, he_normal, zeros


@dataclass
class AttentionParams(ParamGroup):
    q_weight: Tensor
    q_bias: Tensor
    k_weight: Tensor
    k_bias: Tensor
    v_weight: Tensor
    v_bias: Tensor
    out_weight: Tensor
    out_bias: Tensor
    heads: int = 2
    window: int = 4

    @classmethod
    def init(cls, rng: np.random.Generator, width: int, heads: int = 2, window: int = 4, dtype=None) -> "AttentionParams":
        if width % heads:
            raise ConfigurationError("attention width must be divisible by heads", width=width, heads=heads)
        return cls(
            q_weight=he_normal(rng, (width, width), width, dtype),
            q_bias=zeros((width,), dtype),
            k_weight=he_normal(rng, (width, width), width, dtype),
            k_bias=zeros((width,), dtype),
            v_weight=he_normal(rng, (width, width), width, dtype),
            v_bias=zeros((width,), dtype),
            out_weight=he_normal(rng, (width, width), width, dtype),
            out_bias=zeros((width,), dtype),
            heads=heads,
            window=window,
        )

    @property
    def width(self) -> int:
        return self.q_weight.shape[0]


def _split_heads(t: Tensor, heads: int) -> Tensor:
    n, length, width = t.shape
    t = ops.transpose(ops.reshape(t, (n, length, heads, width // heads)), (0, 2, 1, 3))
    return ops.reshape(t, (n * heads, length, width // heads))


def _merge_heads(t: Tensor, heads: int) -> Tensor:
    nh, length, d = t.shape
    t = ops.transpose(ops.reshape(t, (nh // heads, heads, length, d)), (0, 2, 1, 3))
    return ops.reshape(t, (nh // heads, length, heads * d))


def pixel_group_attention(x: Tensor, p: AttentionParams) -> Tensor:
    """
    Multi-head self-attention inside non-overlapping w x w windows of a
    (B, C, H, W) map, plus a residual. No positional encoding.
    """
    if x.ndim != 4 or x.shape[1] != p.width:
        raise ShapeError("pixel_group_attention", x.shape, p.q_weight.shape)
    b, c, h, w = x.shape
    win = p.window
    if h % win or w % win:
        raise ShapeError(
            "pixel_group_attention", x.shape,
            detail=f"H={h} and W={w} must be divisible by window w={win}",
        )
    hn, wn = h // win, w // win

    # (B, C, H, W) -> (B*Hn*Wn, w*w, C)
    tokens = ops.reshape(x, (b, c, hn, win, wn, win))
    tokens = ops.transpose(tokens, (0, 2, 4, 3, 5, 1))
    tokens = ops.reshape(tokens, (b * hn * wn, win * win, c))

    q = _split_heads(ops.add(ops.matmul(tokens, p.q_weight), p.q_bias), p.heads)
    k = _split_heads(ops.add(ops.matmul(tokens, p.k_weight), p.k_bias), p.heads)
    v = _split_heads(ops.add(ops.matmul(tokens, p.v_weight), p.v_bias), p.heads)

    scale = 1.0 / np.sqrt(c // p.heads)
    scores = ops.scalar_scale(ops.matmul(q, ops.transpose(k, (0, 2, 1))), scale)
    attended = _merge_heads(ops.matmul(ops.softmax(scores, axis=-1), v), p.heads)
    projected = ops.add(ops.matmul(attended, p.out_weight), p.out_bias)

    # back to (B, C, H, W)
    out = ops.reshape(projected, (b, hn, wn, win, win, c))
    out = ops.transpose(out, (0, 5, 1, 3, 2, 4))
    out = ops.reshape(out, (b, c, h, w))
    return ops.add(x, out)
