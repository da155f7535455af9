# src/training/ablation.py
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from ..errors import ConfigurationError, FormatError, TrajkitError
from ..logger import logger
from ..schemas import ModelConfig, TrainConfig
from ..simulation import SceneSample
from ..utils import build_config, timed
from .trainer import heldout_metrics, train

ABLATION_COLUMNS = ["method", "split", "ade", "fde", "nll", "status"]


def read_grid(path) -> List[Dict[str, Any]]:
    """One dict per grid row; empty cells fall back to the base model config."""
    path = Path(path)
    if not path.is_file():
        raise FormatError("Grid file not found", path=str(path))
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    unknown = [c for c in frame.columns if c != "method" and c not in ModelConfig.model_fields]
    if unknown:
        raise ConfigurationError("Grid file has unknown columns", columns=unknown)
    rows = [{k: v.strip() for k, v in record.items() if v.strip() != ""} for record in frame.to_dict("records")]
    if not rows:
        raise ConfigurationError("Grid file has no rows", path=str(path))
    return rows


def _failed(method: str, reason: str) -> List[Dict[str, Any]]:
    nan = float("nan")
    return [
        {"method": method, "split": split, "ade": nan, "fde": nan, "nll": nan, "status": f"failed: {reason}"}
        for split in ("in_domain", "shifted")
    ]


@timed("ABLATE")
def run_ablation(
    grid: Sequence[Dict[str, Any]],
    samples: Sequence[SceneSample],
    train_cfg: TrainConfig,
    out_dir,
    base_model: Optional[Dict[str, Any]] = None,
) -> pd.DataFrame:
    """
    Trains every grid row on the in-domain scenes with one shared seed and
    reports held-out in-domain and shifted metrics. Failing rows are recorded
    and the grid continues.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    in_domain = [s for s in samples if s.split_tag == "in_domain"]
    shifted = [s for s in samples if s.split_tag == "shifted"]
    if not in_domain or not shifted:
        raise ConfigurationError("Ablation needs both in_domain and shifted scenes", in_domain=len(in_domain), shifted=len(shifted))

    rows: List[Dict[str, Any]] = []
    for index, entry in enumerate(grid):
        values = {**(base_model or {}), **{k: v for k, v in entry.items() if k != "method"}}
        method = entry.get("method") or f"row-{index}"
        try:
            cfg = build_config(ModelConfig, values)
            method = entry.get("method") or cfg.label
            result = train(cfg, train_cfg, in_domain, checkpoint_path=out_dir / f"row{index:02d}.tjkw")
            held_ids = set(result.heldout_ids)
            held = [s for s in in_domain if s.scene_id in held_ids]
            for split, subset in (("in_domain", held), ("shifted", shifted)):
                rows.append({"method": method, "split": split, **heldout_metrics(result.model, subset), "status": "ok"})
            logger.info(f"[ABLATE] {method}: {rows[-2]['ade']:.4f} in-domain / {rows[-1]['ade']:.4f} shifted ADE")
        except TrajkitError as e:
            logger.error(f"[ABLATE] Row {index} ({method}) failed: {e}", exc_info=True)
            rows.extend(_failed(method, e.detail))

    frame = pd.DataFrame(rows, columns=ABLATION_COLUMNS)
    frame.to_csv(out_dir / "ablation.csv", index=False)
    return frame
