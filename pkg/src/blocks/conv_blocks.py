# src/blocks/conv_blocks.py
"""
Residual convolution units: the normalizer-free block with scaled weight
standardization and the depthwise-separable baseline block.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..autodiff import Tensor, ops
from ..constants import WS_EPS
from ..errors import ConfigurationError, ShapeError
from .params import ParamGroup, he_normal, ones, zeros


def standardize_weights(kernel: Tensor, gain: Optional[Tensor] = None, eps: float = WS_EPS) -> Tensor:
    """
    Per output channel: (w - mean) * gain / sqrt(max(var * fan_in, eps)).
    The result has zero fan-in mean and var * fan_in == 1 when gain is 1.
    """
    if kernel.ndim != 4:
        raise ShapeError("standardize_weights", kernel.shape, detail="kernel must be rank-4")
    out_c = kernel.shape[0]
    fan_in = int(np.prod(kernel.shape[1:]))
    flat = ops.reshape(kernel, (out_c, fan_in))
    centered = ops.sub(flat, ops.expand(ops.mean(flat, axis=1, keepdims=True), (out_c, fan_in)))
    var = ops.mean(ops.power(centered, 2.0), axis=1, keepdims=True)
    inv_std = ops.power(ops.clip(ops.scalar_scale(var, float(fan_in)), lo=eps), -0.5)
    scaled = ops.mul(centered, ops.expand(inv_std, (out_c, fan_in)))
    if gain is not None:
        scaled = ops.mul(scaled, ops.expand(ops.reshape(gain, (out_c, 1)), (out_c, fan_in)))
    return ops.reshape(scaled, kernel.shape)


@dataclass
class NFBlockParams(ParamGroup):
    conv1: Tensor
    conv1_gain: Tensor
    conv1_bias: Tensor
    conv2: Tensor
    conv2_gain: Tensor
    conv2_bias: Tensor
    skip: Optional[Tensor] = None
    skip_gain: Optional[Tensor] = None
    skip_bias: Optional[Tensor] = None
    alpha: float = 0.2
    beta: float = 1.0
    stride: int = 1

    @classmethod
    def init(cls, rng: np.random.Generator, in_c: int, out_c: int, stride: int = 1,
             alpha: float = 0.2, beta: float = 1.0, dtype=None) -> "NFBlockParams":
        if stride not in (1, 2):
            raise ConfigurationError("nf_block stride must be 1 or 2", stride=stride)
        if alpha <= 0 or beta <= 0:
            raise ConfigurationError("nf_block alpha and beta must be > 0", alpha=alpha, beta=beta)
        needs_skip = stride != 1 or in_c != out_c
        return cls(
            conv1=he_normal(rng, (out_c, in_c, 3, 3), in_c * 9, dtype),
            conv1_gain=ones((out_c,), dtype),
            conv1_bias=zeros((out_c,), dtype),
            conv2=he_normal(rng, (out_c, out_c, 3, 3), out_c * 9, dtype),
            conv2_gain=ones((out_c,), dtype),
            conv2_bias=zeros((out_c,), dtype),
            skip=he_normal(rng, (out_c, in_c, 1, 1), in_c, dtype) if needs_skip else None,
            skip_gain=ones((out_c,), dtype) if needs_skip else None,
            skip_bias=zeros((out_c,), dtype) if needs_skip else None,
            alpha=alpha,
            beta=beta,
            stride=stride,
        )


def nf_block(x: Tensor, p: NFBlockParams) -> Tensor:
    """y = skip(x) + alpha * conv2(silu(conv1(silu(beta * x)))), convs standardized at every call."""
    if x.ndim != 4 or x.shape[1] != p.conv1.shape[1]:
        raise ShapeError("nf_block", x.shape, p.conv1.shape)
    h = ops.silu(ops.scalar_scale(x, p.beta))
    h = ops.add(ops.conv2d(h, standardize_weights(p.conv1, p.conv1_gain), stride=p.stride, padding=1), p.conv1_bias)
    h = ops.silu(h)
    h = ops.add(ops.conv2d(h, standardize_weights(p.conv2, p.conv2_gain), stride=1, padding=1), p.conv2_bias)
    if p.skip is None:
        shortcut = x
    else:
        shortcut = ops.add(ops.conv2d(x, standardize_weights(p.skip, p.skip_gain), stride=p.stride), p.skip_bias)
    return ops.add(shortcut, ops.scalar_scale(h, p.alpha))


@dataclass
class DWSBlockParams(ParamGroup):
    depthwise: Tensor
    depthwise_bias: Tensor
    pointwise: Tensor
    pointwise_bias: Tensor
    stride: int = 1

    @classmethod
    def init(cls, rng: np.random.Generator, in_c: int, out_c: int, stride: int = 1, dtype=None) -> "DWSBlockParams":
        return cls(
            depthwise=he_normal(rng, (in_c, 1, 3, 3), 9, dtype),
            depthwise_bias=zeros((in_c,), dtype),
            pointwise=he_normal(rng, (out_c, in_c, 1, 1), in_c, dtype),
            pointwise_bias=zeros((out_c,), dtype),
            stride=stride,
        )


def dws_block(x: Tensor, p: DWSBlockParams) -> Tensor:
    if x.ndim != 4 or x.shape[1] != p.depthwise.shape[0]:
        raise ShapeError("dws_block", x.shape, p.depthwise.shape)
    h = ops.relu(ops.add(ops.depthwise_conv2d(x, p.depthwise, stride=p.stride, padding=1), p.depthwise_bias))
    return ops.relu(ops.add(ops.conv2d(h, p.pointwise), p.pointwise_bias))


def nf_betas(depths, alpha: float):
    """
    Per-block beta = 1 / expected input std. Expected variance grows by alpha^2
    per block and resets to 1 at each stage's first (transition) block.
    """
    betas = []
    for depth in depths:
        variance = 1.0
        for _ in range(depth):
            betas.append(1.0 / math.sqrt(variance))
            variance += alpha ** 2
    return betas
