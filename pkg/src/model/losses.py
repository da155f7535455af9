# src/model/losses.py
from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor, ops
from ..constants import LOG_2PI
from ..errors import ConfigurationError, NumericFaultError, ShapeError
from ..schemas import LossWeights
from .trajectory_model import GaussianTrajectory


@dataclass
class LossBreakdown:
    total: Tensor
    nll: Tensor
    ade_term: Tensor
    fde_term: Tensor

    def as_floats(self) -> dict:
        return {
            "loss": self.total.item(),
            "nll": self.nll.item(),
            "ade_term": self.ade_term.item(),
            "fde_term": self.fde_term.item(),
        }


def _as_tensor(y, like: Tensor) -> Tensor:
    return y if isinstance(y, Tensor) else Tensor(np.asarray(y, dtype=like.dtype))


def nll(dist: GaussianTrajectory, y) -> Tensor:
    """Negative log-likelihood per batch element, shape (B,), summed over steps and coordinates."""
    y = _as_tensor(y, dist.mu)
    if y.shape != dist.mu.shape:
        raise ShapeError("nll", dist.mu.shape, y.shape)
    residual = ops.sub(y, dist.mu)

    if dist.head == "bc":
        if not np.all(np.isfinite(dist.log_sigma.data)):
            raise NumericFaultError("nll: non-finite log-scale")
        whitened = ops.mul(residual, ops.exp(ops.scalar_scale(dist.log_sigma, -1.0)))
        per_coord = ops.add(ops.add(dist.log_sigma, ops.scalar_scale(ops.mul(whitened, whitened), 0.5)), 0.5 * LOG_2PI)
        return ops.sum(per_coord, axis=(1, 2))

    if not (np.all(np.isfinite(dist.log_diag.data)) and np.all(np.isfinite(dist.offdiag.data))):
        raise NumericFaultError("nll: non-finite Cholesky factor")
    inv_diag = ops.exp(ops.scalar_scale(dist.log_diag, -1.0))
    s1 = ops.mul(residual[..., 0:1], inv_diag[..., 0:1])
    s2 = ops.mul(ops.sub(residual[..., 1:2], ops.mul(dist.offdiag, s1)), inv_diag[..., 1:2])
    quad = ops.add(ops.mul(s1, s1), ops.mul(s2, s2))
    log_det = ops.add(dist.log_diag[..., 0:1], dist.log_diag[..., 1:2])
    per_step = ops.add(ops.add(log_det, ops.scalar_scale(quad, 0.5)), LOG_2PI)
    return ops.sum(per_step, axis=(1, 2))


def loss_terms(dist: GaussianTrajectory, realized, y, weights: LossWeights) -> LossBreakdown:
    """
    total = w_nll * mean_B(nll) + w_ade * mean_B(sum_t |Y^_t - Y_t|^2) + w_fde * mean_B(|Y^_T - Y_T|^2)
    The distance terms use squared Euclidean distance.
    """
    if weights.nll == 0 and weights.ade == 0 and weights.fde == 0:
        raise ConfigurationError("Loss weights must not all be zero")
    y = _as_tensor(y, dist.mu)
    realized = _as_tensor(realized, dist.mu)
    if realized.shape != y.shape or realized.ndim != 3 or realized.shape[2] != 2:
        raise ShapeError("combined_loss", realized.shape, y.shape)

    nll_mean = ops.mean(nll(dist, y))
    diff = ops.sub(realized, y)
    ade_term = ops.mean(ops.sum(ops.mul(diff, diff), axis=(1, 2)))
    last = diff[:, -1, :]
    fde_term = ops.mean(ops.sum(ops.mul(last, last), axis=1))

    total = ops.add(
        ops.add(ops.scalar_scale(nll_mean, weights.nll), ops.scalar_scale(ade_term, weights.ade)),
        ops.scalar_scale(fde_term, weights.fde),
    )
    return LossBreakdown(total=total, nll=nll_mean, ade_term=ade_term, fde_term=fde_term)


def combined_loss(dist: GaussianTrajectory, realized, y, weights: LossWeights) -> Tensor:
    return loss_terms(dist, realized, y, weights).total
