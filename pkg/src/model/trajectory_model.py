# src/model/trajectory_model.py
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..autodiff import Tensor, default_dtype, ops
from ..blocks import (
    AttentionParams,
    DWSBlockParams,
    GRUParams,
    LinearParams,
    NFBlockParams,
    ParamGroup,
    dws_block,
    gru_cell,
    he_normal,
    linear,
    nf_betas,
    nf_block,
    pixel_group_attention,
    standardize_weights,
)
from ..blocks.params import ones, zeros
from ..constants import FUTURE_STEPS, LOG_SCALE_MAX, LOG_SCALE_MIN
from ..errors import ConfigurationError, FormatError, ShapeError
from ..schemas import ModelConfig

DECODE_MODES = ("teacher_forced", "mean", "sample")


@dataclass
class GaussianTrajectory:
    """
    Per-step predictive Gaussians over (B, T, 2).
    bc:  independent coordinates, log_sigma (B, T, 2).
    dim: lower-triangular factor L_t = [[exp(a), 0], [c, exp(b)]], log_diag = (a, b), offdiag = c.
    """
    head: str
    mu: Tensor
    log_sigma: Optional[Tensor] = None
    log_diag: Optional[Tensor] = None
    offdiag: Optional[Tensor] = None

    @property
    def steps(self) -> int:
        return self.mu.shape[1]

    def marginal_std(self) -> np.ndarray:
        """Per-coordinate standard deviations (B, T, 2) as a plain array."""
        if self.head == "bc":
            return np.exp(self.log_sigma.data)
        diag = np.exp(self.log_diag.data)
        sx = diag[..., 0]
        sy = np.sqrt(diag[..., 1] ** 2 + self.offdiag.data[..., 0] ** 2)
        return np.stack([sx, sy], axis=-1)


def _stack_steps(steps: List[Tensor]) -> Tensor:
    """List of (B, D) tensors into (B, T, D)."""
    b, d = steps[0].shape
    return ops.concat([ops.reshape(s, (b, 1, d)) for s in steps], axis=1)


class TrajectoryModel(ParamGroup):
    """
    Raster encoder (stem, residual stages, optional window attention, pooling,
    projection to K) feeding a GRU decoder with a Gaussian output head.
    """

    def __init__(self, cfg: ModelConfig, seed: int = 0, dtype=None):
        self.cfg = cfg
        self.dtype = np.dtype(dtype or default_dtype())
        rng = np.random.default_rng(seed)
        block_kind = cfg.preset["block"]
        widths = cfg.stage_widths
        dt = self.dtype

        self.stem = he_normal(rng, (cfg.base_width, cfg.channels, 3, 3), cfg.channels * 9, dt)
        self.stem_gain = ones((cfg.base_width,), dt) if block_kind == "nf" else None
        self.stem_bias = zeros((cfg.base_width,), dt)

        self.blocks: List[Union[NFBlockParams, DWSBlockParams]] = []
        betas = iter(nf_betas(cfg.depths, cfg.nf_alpha))
        in_c = cfg.base_width
        for stage, (depth, width) in enumerate(zip(cfg.depths, widths)):
            for i in range(depth):
                stride = 2 if stage > 0 and i == 0 else 1
                if block_kind == "nf":
                    block = NFBlockParams.init(rng, in_c, width, stride, alpha=cfg.nf_alpha, beta=next(betas), dtype=dt)
                else:
                    block = DWSBlockParams.init(rng, in_c, width, stride, dtype=dt)
                self.blocks.append(block)
                in_c = width

        self.attention = (
            AttentionParams.init(rng, cfg.final_width, cfg.attention_heads, cfg.attention_window, dt)
            if cfg.attention else None
        )
        self.to_hidden = LinearParams.init(rng, cfg.final_width, cfg.hidden_width, dt)
        self.gru = GRUParams.init(rng, cfg.hidden_width, dtype=dt)
        self.head = LinearParams.init(rng, cfg.hidden_width, cfg.head_width, dt)

    # --- parameters -------------------------------------------------------
    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state(self, state: Dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        if missing or unexpected:
            raise FormatError("Parameter names do not match the model", missing=missing, unexpected=unexpected)
        for name, p in params.items():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise FormatError("Parameter shape mismatch", name=name, expected=p.shape, actual=value.shape)
            p.data = value.astype(self.dtype, copy=True)
            p.grad = None

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def snapshot(self) -> "TrajectoryModel":
        """Independent copy for evaluation; never shares arrays with the live model."""
        twin = TrajectoryModel(self.cfg, seed=0, dtype=self.dtype)
        twin.load_state(self.state_dict())
        return twin

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    # --- encoder ----------------------------------------------------------
    def _as_tensor(self, x) -> Tensor:
        return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=self.dtype))

    def encode(self, x) -> Tensor:
        x = self._as_tensor(x)
        expected = (self.cfg.channels, self.cfg.raster_size, self.cfg.raster_size)
        if x.ndim != 4 or tuple(x.shape[1:]) != expected:
            raise ShapeError("encode", x.shape, (-1, *expected))

        if self.stem_gain is not None:
            h = ops.add(ops.conv2d(x, standardize_weights(self.stem, self.stem_gain), stride=2, padding=1), self.stem_bias)
        else:
            h = ops.relu(ops.add(ops.conv2d(x, self.stem, stride=2, padding=1), self.stem_bias))

        for block in self.blocks:
            h = nf_block(h, block) if isinstance(block, NFBlockParams) else dws_block(h, block)
        if self.attention is not None:
            h = pixel_group_attention(h, self.attention)
        return linear(ops.global_avg_pool(h), self.to_hidden)

    # --- decoder ----------------------------------------------------------
    def _head_step(self, z: Tensor):
        out = linear(z, self.head)
        mu = out[:, 0:2]
        if self.cfg.head == "bc":
            return mu, (ops.clip(out[:, 2:4], LOG_SCALE_MIN, LOG_SCALE_MAX),)
        return mu, (ops.clip(out[:, 2:4], LOG_SCALE_MIN, LOG_SCALE_MAX), out[:, 4:5])

    def _draw(self, mu: Tensor, scales, rng: np.random.Generator) -> Tensor:
        eps = rng.standard_normal(mu.shape)
        if self.cfg.head == "bc":
            sample = mu.data + np.exp(scales[0].data) * eps
        else:
            diag = np.exp(scales[0].data)
            c = scales[1].data[:, 0]
            sample = np.stack([
                mu.data[:, 0] + diag[:, 0] * eps[:, 0],
                mu.data[:, 1] + c * eps[:, 0] + diag[:, 1] * eps[:, 1],
            ], axis=-1)
        return Tensor(sample.astype(self.dtype))

    def decode(
        self,
        z0: Tensor,
        mode: str = "mean",
        ground_truth=None,
        seed: Optional[int] = None,
        steps: int = FUTURE_STEPS,
    ) -> Tuple[GaussianTrajectory, Tensor]:
        """
        Unrolls the GRU from Y_0 = 0. The previous output fed at step t is the
        ground truth (teacher_forced), mu (mean) or a seeded Gaussian draw (sample).
        """
        if mode not in DECODE_MODES:
            raise ConfigurationError(f"Unknown decode mode '{mode}'", allowed=list(DECODE_MODES))
        batch = z0.shape[0]
        if mode == "teacher_forced":
            if ground_truth is None:
                raise ConfigurationError("teacher_forced decoding needs ground truth")
            gt = ground_truth if isinstance(ground_truth, Tensor) else Tensor(np.asarray(ground_truth, dtype=self.dtype))
            if gt.shape != (batch, steps, 2):
                raise ShapeError("decode", gt.shape, (batch, steps, 2))
        rng = np.random.default_rng(seed) if mode == "sample" else None

        y_prev = Tensor(np.zeros((batch, 2), dtype=self.dtype))
        z = z0
        mus, scale_parts, realized = [], [], []
        for t in range(steps):
            z = gru_cell(y_prev, z, self.gru)
            mu, scales = self._head_step(z)
            mus.append(mu)
            scale_parts.append(scales)
            if mode == "teacher_forced":
                y_t = gt[:, t, :]
            elif mode == "mean":
                y_t = mu
            else:
                y_t = self._draw(mu, scales, rng)
            realized.append(y_t)
            y_prev = y_t

        mu_all = _stack_steps(mus)
        if self.cfg.head == "bc":
            dist = GaussianTrajectory("bc", mu_all, log_sigma=_stack_steps([s[0] for s in scale_parts]))
        else:
            dist = GaussianTrajectory(
                "dim", mu_all,
                log_diag=_stack_steps([s[0] for s in scale_parts]),
                offdiag=_stack_steps([s[1] for s in scale_parts]),
            )
        return dist, _stack_steps(realized)

    def predict(self, x, mode: str = "mean", seed: Optional[int] = None) -> Tuple[GaussianTrajectory, Tensor]:
        return self.decode(self.encode(x), mode=mode, seed=seed)
