# src/evaluation/harness.py
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

from ..errors import ConfigurationError, DatasetError, FormatError
from ..ensemble import PredictionRecord, read_predictions
from ..logger import logger
from ..metrics import RetentionCurve, gaussian_nll, oracle_r_auc, retention_curve
from ..simulation import SceneSample, read_dataset
from ..utils import worker_count

METRICS = ("ade", "fde", "cnll")
REPORT_COLUMNS = ["split", "metric", "mean", "wmean", "minmean", "r_auc"]
POOLED = "all"


@dataclass(frozen=True)
class SceneScore:
    scene_id: int
    split: str
    top: float        # highest-confidence candidate
    weighted: float   # confidence-weighted over candidates
    best: float       # minimum over candidates
    uncertainty: float


@dataclass
class SplitResult:
    split: str
    metric: str
    mean: float
    wmean: float
    minmean: float
    r_auc: float
    oracle_r_auc: float
    count: int


@dataclass
class EvaluationReport:
    metric: str
    results: List[SplitResult]
    curves: Dict[str, RetentionCurve] = field(default_factory=dict)
    scenes: List[SceneScore] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        rows = [{col: getattr(r, col) for col in REPORT_COLUMNS} for r in self.results]
        return pd.DataFrame(rows, columns=REPORT_COLUMNS)

    def write_csv(self, path) -> Path:
        path = Path(path)
        self.to_frame().to_csv(path, index=False)
        return path

    def result(self, split: str) -> SplitResult:
        return next(r for r in self.results if r.split == split)


def _per_candidate_errors(record: PredictionRecord, gt: np.ndarray, metric: str) -> np.ndarray:
    cset = record.candidates
    if metric == "cnll":
        if cset.scales is None:
            raise FormatError("cnll needs per-candidate scales in the prediction file", scene_id=record.scene_id)
        return np.array([gaussian_nll(cset.trajectories[g], cset.scales[g], gt) for g in range(cset.size)])
    dist = np.linalg.norm(cset.trajectories - gt[None], axis=-1)
    return dist.mean(axis=1) if metric == "ade" else dist[:, -1]


def score_scene(record: PredictionRecord, sample: SceneSample, metric: str) -> SceneScore:
    cset = record.candidates
    errors = _per_candidate_errors(record, sample.future, metric)
    return SceneScore(
        scene_id=record.scene_id,
        split=sample.split_tag,
        top=float(errors[int(np.argmax(cset.confidences))]),
        weighted=float(np.dot(cset.confidences, errors)),
        best=float(errors.min()),
        uncertainty=float(cset.scene_uncertainty),
    )


def join_by_scene(records: Sequence[PredictionRecord], samples: Sequence[SceneSample]):
    dup_preds = sorted(i for i, n in Counter(r.scene_id for r in records).items() if n > 1)
    if dup_preds:
        raise DatasetError("Duplicate scene ids in predictions", ids=dup_preds)
    dup_data = sorted(i for i, n in Counter(s.scene_id for s in samples).items() if n > 1)
    if dup_data:
        raise DatasetError("Duplicate scene ids in dataset", ids=dup_data)
    by_id = {s.scene_id: s for s in samples}
    missing = sorted(r.scene_id for r in records if r.scene_id not in by_id)
    if missing:
        raise DatasetError("Predicted scenes missing from the dataset", ids=missing)
    return [(r, by_id[r.scene_id]) for r in records]


def summarize(scores: Sequence[SceneScore], metric: str, split: str):
    top = np.array([s.top for s in scores])
    weighted = np.array([s.weighted for s in scores])
    best = np.array([s.best for s in scores])
    curve = retention_curve(weighted, [s.uncertainty for s in scores])
    result = SplitResult(
        split=split,
        metric=metric,
        mean=float(top.mean()),
        wmean=float(weighted.mean()),
        minmean=float(best.mean()),
        r_auc=curve.r_auc,
        oracle_r_auc=oracle_r_auc(weighted),
        count=len(scores),
    )
    return result, curve


def evaluate_records(records: Sequence[PredictionRecord], samples: Sequence[SceneSample], metric: str = "ade") -> EvaluationReport:
    if metric not in METRICS:
        raise ConfigurationError(f"Unknown metric '{metric}'", allowed=list(METRICS))
    if not records:
        raise DatasetError("No predictions to evaluate")
    pairs = join_by_scene(records, samples)
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        scores = list(pool.map(lambda pair: score_scene(pair[0], pair[1], metric), pairs))
    # retention breaks uncertainty ties by position, so fix the order by scene id
    scores.sort(key=lambda s: s.scene_id)

    report = EvaluationReport(metric=metric, results=[], scenes=scores)
    for split in ("in_domain", "shifted"):
        subset = [s for s in scores if s.split == split]
        if subset:
            result, curve = summarize(subset, metric, split)
            report.results.append(result)
            report.curves[split] = curve
    result, curve = summarize(scores, metric, POOLED)
    report.results.append(result)
    report.curves[POOLED] = curve

    for r in report.results:
        logger.info(
            f"[EVAL] {r.split:<9} {metric}: mean={r.mean:.4f} wmean={r.wmean:.4f} "
            f"minmean={r.minmean:.4f} r_auc={r.r_auc:.4f} (oracle {r.oracle_r_auc:.4f}, n={r.count})"
        )
    return report


def evaluate(pred_file, dataset_file, metric: str = "ade") -> EvaluationReport:
    return evaluate_records(read_predictions(pred_file), read_dataset(dataset_file), metric)


def retention_from_csv(path) -> RetentionCurve:
    """Reads a CSV with `error` and `uncertainty` columns."""
    frame = pd.read_csv(path)
    missing = {"error", "uncertainty"} - set(frame.columns)
    if missing:
        raise FormatError("Retention input is missing columns", path=str(path), columns=sorted(missing))
    return retention_curve(frame["error"].to_numpy(), frame["uncertainty"].to_numpy())
