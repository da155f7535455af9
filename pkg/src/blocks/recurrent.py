# src/blocks/recurrent.py
from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor, ops
from ..errors import ShapeError
from .params import ParamGroup, he_normal, zeros


@dataclass
class LinearParams(ParamGroup):
    weight: Tensor   # (in, out)
    bias: Tensor     # (out,)

    @classmethod
    def init(cls, rng: np.random.Generator, in_features: int, out_features: int, dtype=None) -> "LinearParams":
        return cls(
            weight=he_normal(rng, (in_features, out_features), in_features, dtype),
            bias=zeros((out_features,), dtype),
        )


def linear(x: Tensor, p: LinearParams) -> Tensor:
    if x.shape[-1] != p.weight.shape[0]:
        raise ShapeError("linear", x.shape, p.weight.shape)
    return ops.add(ops.matmul(x, p.weight), p.bias)


@dataclass
class GRUParams(ParamGroup):
    embed: LinearParams          # y_{t-1} (2) -> K
    w_reset: Tensor
    u_reset: Tensor
    reset_bias: Tensor
    w_update: Tensor
    u_update: Tensor
    update_bias: Tensor
    w_cand: Tensor
    u_cand: Tensor
    cand_bias: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, hidden: int, input_width: int = 2, dtype=None) -> "GRUParams":
        def square():
            return he_normal(rng, (hidden, hidden), hidden, dtype)

        return cls(
            embed=LinearParams.init(rng, input_width, hidden, dtype),
            w_reset=square(), u_reset=square(), reset_bias=zeros((hidden,), dtype),
            w_update=square(), u_update=square(), update_bias=zeros((hidden,), dtype),
            w_cand=square(), u_cand=square(), cand_bias=zeros((hidden,), dtype),
        )

    @property
    def hidden(self) -> int:
        return self.w_reset.shape[1]


def gru_cell(y_prev: Tensor, z_prev: Tensor, p: GRUParams) -> Tensor:
    """z' = (1 - u) * z + u * c, with the previous output embedded to width K first."""
    if y_prev.ndim != 2 or z_prev.ndim != 2 or z_prev.shape[1] != p.hidden or y_prev.shape[0] != z_prev.shape[0]:
        raise ShapeError("gru_cell", y_prev.shape, z_prev.shape)
    inp = linear(y_prev, p.embed)
    r = ops.sigmoid(ops.add(ops.add(ops.matmul(inp, p.w_reset), ops.matmul(z_prev, p.u_reset)), p.reset_bias))
    u = ops.sigmoid(ops.add(ops.add(ops.matmul(inp, p.w_update), ops.matmul(z_prev, p.u_update)), p.update_bias))
    gated = ops.mul(r, z_prev)
    c = ops.tanh(ops.add(ops.add(ops.matmul(inp, p.w_cand), ops.matmul(gated, p.u_cand)), p.cand_bias))
    return ops.add(z_prev, ops.mul(u, ops.sub(c, z_prev)))
