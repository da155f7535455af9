# src/ensemble/rip.py
"""
Robust imitative planning over an ensemble: pool candidate plans from every
member, score each plan under every member, aggregate per plan across members
and pick the plan with the best aggregated score.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from ..autodiff import Tensor
from ..errors import ConfigurationError, NumericFaultError, ShapeError
from ..logger import logger
from ..metrics import CandidateSet
from ..model import TrajectoryModel, check_compatible, nll
from ..utils import derive_seed, worker_count

# Aggregators reduce a (G, K) score matrix to one score per candidate
AGGREGATORS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "worst_case": lambda scores: scores.min(axis=1),
}

SELECTIONS = ("max", "min")


@dataclass
class EnsemblePrediction:
    candidates: np.ndarray            # (G, T, 2)
    scales: np.ndarray                # (G, T, 2) marginal std under the source model
    source_model: np.ndarray          # (G,) index of the model that proposed each candidate
    per_candidate_scores: np.ndarray  # (G, K) mean-over-steps log-likelihood
    aggregated: np.ndarray            # (G,)
    chosen_index: int
    confidences: np.ndarray           # softmax(aggregated)
    scene_uncertainty: float

    @property
    def chosen(self) -> np.ndarray:
        return self.candidates[self.chosen_index]

    def to_candidate_set(self) -> CandidateSet:
        return CandidateSet(
            trajectories=self.candidates,
            confidences=self.confidences,
            scene_uncertainty=self.scene_uncertainty,
            scales=self.scales,
        )


def _single_raster(model: TrajectoryModel, x) -> np.ndarray:
    x = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=model.dtype)
    if x.ndim == 3:
        x = x[None]
    if x.ndim != 4 or x.shape[0] != 1:
        raise ShapeError("rip", x.shape, detail="expected a single raster (C, S, S)")
    return x


def _repeat_hidden(z0: Tensor, count: int) -> Tensor:
    return Tensor(np.repeat(z0.data, count, axis=0))


def score_candidates(model: TrajectoryModel, x, candidates) -> np.ndarray:
    """Log-likelihood of each (T, 2) candidate under `model`, averaged over steps."""
    candidates = np.asarray(candidates, dtype=model.dtype)
    if candidates.ndim == 2:
        candidates = candidates[None]
    if not np.all(np.isfinite(candidates)):
        raise NumericFaultError("score_under_model: non-finite candidate")
    g, steps, _ = candidates.shape
    z0 = model.encode(_single_raster(model, x))
    dist, _ = model.decode(_repeat_hidden(z0, g), mode="teacher_forced", ground_truth=candidates, steps=steps)
    return -nll(dist, candidates).data.astype(np.float64) / steps


def score_under_model(model: TrajectoryModel, x, candidate) -> float:
    return float(score_candidates(model, x, candidate)[0])


def aggregate_scores(score_matrix, aggregator: str = "worst_case", selection: str = "max") -> Tuple[np.ndarray, int]:
    """Per-candidate aggregate over models and the selected index (ties to the lowest index)."""
    scores = np.asarray(score_matrix, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] < 1 or scores.shape[1] < 1:
        raise ShapeError("aggregate_scores", scores.shape, detail="score matrix must be (G, K) with G, K >= 1")
    if aggregator not in AGGREGATORS:
        raise ConfigurationError(f"Unknown aggregator '{aggregator}'", allowed=sorted(AGGREGATORS))
    if selection not in SELECTIONS:
        raise ConfigurationError(f"Unknown selection '{selection}'", allowed=list(SELECTIONS))
    aggregated = AGGREGATORS[aggregator](scores)
    chosen = int(np.argmax(aggregated) if selection == "max" else np.argmin(aggregated))
    return aggregated, chosen


def _softmax(values: np.ndarray) -> np.ndarray:
    e = np.exp(values - values.max())
    return e / e.sum()


def _propose(model: TrajectoryModel, x: np.ndarray, samples: int, seed: int):
    """Mean trajectory plus `samples` seeded draws, with their marginal scales."""
    z0 = model.encode(x)
    mean_dist, mean_path = model.decode(z0, mode="mean")
    paths = [mean_path.data]
    scales = [mean_dist.marginal_std()]
    if samples > 0:
        dist, drawn = model.decode(_repeat_hidden(z0, samples), mode="sample", seed=seed)
        paths.append(drawn.data)
        scales.append(dist.marginal_std())
    return np.concatenate(paths, axis=0), np.concatenate(scales, axis=0)


def rip_predict(
    models: Sequence[TrajectoryModel],
    x,
    samples_per_model: int = 1,
    seed: int = 0,
    selection: str = "max",
    aggregator: str = "worst_case",
) -> EnsemblePrediction:
    models = list(models)
    check_compatible(models)
    if samples_per_model < 0:
        raise ConfigurationError("samples_per_model must be >= 0", samples_per_model=samples_per_model)
    raster = _single_raster(models[0], x)

    proposals = [_propose(m, raster, samples_per_model, derive_seed(seed, k)) for k, m in enumerate(models)]
    candidates = np.concatenate([p[0] for p in proposals], axis=0).astype(np.float64)
    scales = np.concatenate([p[1] for p in proposals], axis=0).astype(np.float64)
    source = np.repeat(np.arange(len(models)), samples_per_model + 1)

    # members are read-only here; each thread runs forward-only ops
    with ThreadPoolExecutor(max_workers=min(worker_count(), len(models))) as pool:
        columns = list(pool.map(lambda m: score_candidates(m, raster, candidates), models))
    score_matrix = np.stack(columns, axis=1)

    aggregated, chosen = aggregate_scores(score_matrix, aggregator, selection)
    prediction = EnsemblePrediction(
        candidates=candidates,
        scales=scales,
        source_model=source,
        per_candidate_scores=score_matrix,
        aggregated=aggregated,
        chosen_index=chosen,
        confidences=_softmax(aggregated),
        scene_uncertainty=float(-aggregated[chosen]),
    )
    logger.debug(
        f"[RIP] K={len(models)} G={len(candidates)} chosen={chosen} uncertainty={prediction.scene_uncertainty:.4f}"
    )
    return prediction


def predict_scenes(
    models: Sequence[TrajectoryModel],
    rasters: Sequence[np.ndarray],
    scene_ids: Sequence[int],
    samples_per_model: int = 1,
    seed: int = 0,
    selection: str = "max",
) -> List[EnsemblePrediction]:
    """Per-scene rip_predict in parallel; scene seeds derive from (seed, scene_id)."""
    def run(item):
        scene_id, raster = item
        return rip_predict(models, raster, samples_per_model, derive_seed(seed, scene_id), selection)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return list(pool.map(run, zip(scene_ids, rasters)))
