# src/metrics/displacement.py
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..constants import LOG_2PI
from ..errors import ConfigurationError, NumericFaultError, ShapeError

CONFIDENCE_TOL = 1e-6


def _pair(pred, gt, op: str) -> Tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim < 2 or pred.shape[-1] != 2:
        raise ShapeError(op, pred.shape, gt.shape)
    return pred, gt


def ade(pred, gt) -> float:
    """Mean per-step Euclidean distance."""
    pred, gt = _pair(pred, gt, "ade")
    return float(np.linalg.norm(pred - gt, axis=-1).mean(axis=-1))


def fde(pred, gt) -> float:
    pred, gt = _pair(pred, gt, "fde")
    return float(np.linalg.norm(pred[..., -1, :] - gt[..., -1, :], axis=-1))


def gaussian_nll(points, scales, gt) -> float:
    """NLL of gt under independent per-coordinate Gaussians centred on `points`."""
    points, gt = _pair(points, gt, "gaussian_nll")
    scales = np.asarray(scales, dtype=np.float64)
    if scales.shape != points.shape:
        raise ShapeError("gaussian_nll", points.shape, scales.shape)
    if not np.all(scales > 0):
        raise NumericFaultError("gaussian_nll: non-positive scale")
    z = (gt - points) / scales
    return float(np.sum(0.5 * LOG_2PI + np.log(scales) + 0.5 * z * z))


@dataclass
class CandidateSet:
    trajectories: np.ndarray                 # (G, T, 2)
    confidences: np.ndarray                  # (G,)
    scene_uncertainty: float = 0.0
    scales: Optional[np.ndarray] = None      # (G, T, 2) marginal std per candidate

    def __post_init__(self):
        self.trajectories = np.asarray(self.trajectories, dtype=np.float64)
        self.confidences = np.asarray(self.confidences, dtype=np.float64).reshape(-1)
        if self.trajectories.ndim != 3 or self.trajectories.shape[-1] != 2:
            raise ShapeError("CandidateSet", self.trajectories.shape, detail="trajectories must be (G, T, 2)")
        g = self.trajectories.shape[0]
        if g < 1:
            raise ConfigurationError("CandidateSet needs at least one candidate")
        if self.confidences.shape != (g,):
            raise ShapeError("CandidateSet", self.trajectories.shape, self.confidences.shape)
        if np.any(self.confidences < 0) or abs(self.confidences.sum() - 1.0) > CONFIDENCE_TOL:
            raise ConfigurationError("Confidences must be non-negative and sum to 1", total=float(self.confidences.sum()))
        if not (np.all(np.isfinite(self.trajectories)) and np.isfinite(self.scene_uncertainty)):
            raise NumericFaultError("CandidateSet holds non-finite values")
        if self.scales is not None:
            self.scales = np.asarray(self.scales, dtype=np.float64)
            if self.scales.shape != self.trajectories.shape:
                raise ShapeError("CandidateSet", self.trajectories.shape, self.scales.shape)

    @property
    def size(self) -> int:
        return self.trajectories.shape[0]

    @property
    def top(self) -> np.ndarray:
        """Highest-confidence candidate; ties resolve to the lowest index."""
        return self.trajectories[int(np.argmax(self.confidences))]


@dataclass(frozen=True)
class MinAggregate:
    min_ade: float
    min_fde: float


@dataclass(frozen=True)
class WeightedAggregate:
    wade: float
    wfde: float
    cnll: Optional[float] = None


def _per_candidate(cset: CandidateSet, gt) -> Tuple[np.ndarray, np.ndarray]:
    gt = np.asarray(gt, dtype=np.float64)
    if gt.shape != cset.trajectories.shape[1:]:
        raise ShapeError("aggregate", cset.trajectories.shape[1:], gt.shape)
    dist = np.linalg.norm(cset.trajectories - gt[None], axis=-1)   # (G, T)
    return dist.mean(axis=1), dist[:, -1]


def min_agg(cset: CandidateSet, gt) -> MinAggregate:
    ades, fdes = _per_candidate(cset, gt)
    return MinAggregate(min_ade=float(ades.min()), min_fde=float(fdes.min()))


def weighted_agg(cset: CandidateSet, gt, nlls=None) -> WeightedAggregate:
    """
    Confidence-weighted ADE/FDE. cNLL uses `nlls` when given, otherwise each
    candidate's stored scales; it is None when neither is available.
    """
    ades, fdes = _per_candidate(cset, gt)
    c = cset.confidences
    if nlls is None and cset.scales is not None:
        nlls = [gaussian_nll(cset.trajectories[g], cset.scales[g], gt) for g in range(cset.size)]
    cnll = None
    if nlls is not None:
        nlls = np.asarray(nlls, dtype=np.float64)
        if nlls.shape != c.shape:
            raise ShapeError("weighted_agg", c.shape, nlls.shape)
        cnll = float(np.dot(c, nlls))
    return WeightedAggregate(wade=float(np.dot(c, ades)), wfde=float(np.dot(c, fdes)), cnll=cnll)
