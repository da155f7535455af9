# src/commands/predict_commands.py
from pathlib import Path

from ..autodiff import dtype_for
from ..config import settings
from ..ensemble import predict_scenes, write_predictions
from ..logger import logger
from ..model import check_compatible, load_checkpoint
from ..simulation import read_dataset
from .base import CommandResult


def handle_predict(args) -> CommandResult:
    """One checkpoint yields its mean trajectory only; several run the worst-case ensemble."""
    paths = [p.strip() for p in args.models.split(",") if p.strip()]
    dtype = dtype_for(settings.TRAJKIT_PRECISION)
    models = [load_checkpoint(p, dtype=dtype) for p in paths]
    check_compatible(models)
    samples_per_model = args.samples if len(models) > 1 else 0

    scenes = read_dataset(args.data)
    predictions = predict_scenes(
        models,
        [s.raster for s in scenes],
        [s.scene_id for s in scenes],
        samples_per_model=samples_per_model,
        seed=args.seed,
        selection=args.selection,
    )
    out = write_predictions(zip([s.scene_id for s in scenes], predictions), args.out)
    logger.info(f"[CLI] predict: {len(models)} model(s), {len(scenes)} scenes -> {out}")
    return CommandResult(
        primary_output=Path(out),
        outputs={"predictions": str(out)},
        inputs={"data": str(args.data), **{f"model_{i}": p for i, p in enumerate(paths)}},
        resolved_config={
            "models": [m.cfg.model_dump() for m in models],
            "samples_per_model": samples_per_model,
            "selection": args.selection,
            "precision": settings.TRAJKIT_PRECISION,
        },
        seed=args.seed,
    )
