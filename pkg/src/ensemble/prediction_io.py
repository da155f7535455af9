# src/ensemble/prediction_io.py
"""
Prediction files are JSON lines, one scene per line, keys in this order:

    {"scene_id": int, "G": int,
     "candidates": [{"confidence": float, "points": [[x, y] * T], "scales": [[sx, sy] * T]}, ...],
     "scene_uncertainty": float}
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Tuple

import numpy as np

from ..errors import FormatError, TrajkitError
from ..logger import logger
from ..metrics import CandidateSet
from .rip import EnsemblePrediction


@dataclass
class PredictionRecord:
    scene_id: int
    candidates: CandidateSet


def encode_record(scene_id: int, prediction: EnsemblePrediction) -> str:
    record = {
        "scene_id": int(scene_id),
        "G": int(len(prediction.candidates)),
        "candidates": [
            {
                "confidence": float(prediction.confidences[g]),
                "points": np.round(prediction.candidates[g], 6).tolist(),
                "scales": np.round(prediction.scales[g], 6).tolist(),
            }
            for g in range(len(prediction.candidates))
        ],
        "scene_uncertainty": float(prediction.scene_uncertainty),
    }
    return json.dumps(record, separators=(",", ":"))


def write_predictions(items: Iterable[Tuple[int, EnsemblePrediction]], path) -> Path:
    path = Path(path)
    lines = [encode_record(scene_id, pred) for scene_id, pred in items]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"[RIP] Wrote {len(lines)} scene predictions to {path}")
    return path


def decode_record(line: str, source: str = "<line>") -> PredictionRecord:
    try:
        raw = json.loads(line)
        candidates = raw["candidates"]
        if len(candidates) != int(raw["G"]):
            raise FormatError("Candidate count does not match G", path=source, scene_id=raw["scene_id"])
        confidences = np.array([c["confidence"] for c in candidates], dtype=np.float64)
        # confidences are rounded in transit; renormalise before validation
        cset = CandidateSet(
            trajectories=np.array([c["points"] for c in candidates], dtype=np.float64),
            confidences=confidences / confidences.sum(),
            scene_uncertainty=float(raw["scene_uncertainty"]),
            scales=np.array([c["scales"] for c in candidates], dtype=np.float64) if all("scales" in c for c in candidates) else None,
        )
        return PredictionRecord(scene_id=int(raw["scene_id"]), candidates=cset)
    except TrajkitError as e:
        raise FormatError(f"Invalid prediction record: {e.detail}", path=source) from e
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError("Malformed prediction record", path=source, error=str(e)) from e


def read_predictions(path) -> List[PredictionRecord]:
    path = Path(path)
    if not path.is_file():
        raise FormatError("Prediction file not found", path=str(path))
    records = [
        decode_record(line, f"{path}:{i + 1}")
        for i, line in enumerate(path.read_text(encoding="utf-8").splitlines())
        if line.strip()
    ]
    logger.info(f"[EVAL] Read {len(records)} scene predictions from {path}")
    return records
