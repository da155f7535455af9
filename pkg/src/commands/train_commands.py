# src/commands/train_commands.py
from pathlib import Path

from ..errors import ConfigurationError
from ..logger import logger
from ..schemas import ModelConfig, TrainConfig
from ..simulation import read_dataset, read_header
from ..training import read_grid, run_ablation, train
from ..utils import build_config, read_flat_config, route_config
from .base import CommandResult

PAPER_RASTER_SIZE = 128


def _load_run_config(config_path, data_path, paper_scale: bool = False):
    values = read_flat_config(config_path) if config_path else {}
    routed = route_config(values, ModelConfig, TrainConfig)
    model_values = routed["ModelConfig"]
    header = read_header(data_path)
    # raster geometry follows the dataset unless the config pins it
    model_values.setdefault("channels", header.channels)
    model_values.setdefault("raster_size", header.size)
    if paper_scale:
        if header.size != PAPER_RASTER_SIZE:
            raise ConfigurationError(
                f"--paper-scale needs {PAPER_RASTER_SIZE}-px rasters; regenerate the dataset with size = {PAPER_RASTER_SIZE}",
                dataset=str(data_path), dataset_size=header.size,
            )
        model_values["raster_size"] = PAPER_RASTER_SIZE
    train_cfg = build_config(TrainConfig, routed["TrainConfig"])
    if paper_scale:
        train_cfg = train_cfg.at_paper_scale()
    return model_values, train_cfg


def handle_train(args) -> CommandResult:
    model_values, train_cfg = _load_run_config(args.config, args.data, args.paper_scale)
    model_cfg = build_config(ModelConfig, model_values)
    samples = read_dataset(args.data)
    log_path = Path(args.log) if args.log else Path(args.out).with_suffix(".log.csv")

    result = train(model_cfg, train_cfg, samples, checkpoint_path=args.out, log_path=log_path)
    logger.info(f"[CLI] train: {model_cfg.label} -> {result.checkpoint}")
    return CommandResult(
        primary_output=Path(result.checkpoint),
        outputs={"checkpoint": str(result.checkpoint), "log": str(log_path)},
        inputs={"data": str(args.data), **({"config": str(args.config)} if args.config else {})},
        resolved_config={"model": model_cfg.model_dump(), "train": train_cfg.model_dump()},
        seed=train_cfg.seed,
    )


def handle_ablate(args) -> CommandResult:
    model_values, train_cfg = _load_run_config(args.config, args.data)
    grid = read_grid(args.grid)
    samples = read_dataset(args.data)

    frame = run_ablation(grid, samples, train_cfg, args.out_dir, base_model=model_values)
    out = Path(args.out_dir) / "ablation.csv"
    failed = int((frame["status"] != "ok").sum())
    logger.info(f"[CLI] ablate: {len(grid)} configs, {len(frame)} rows ({failed} failed) -> {out}")
    return CommandResult(
        primary_output=out,
        outputs={"ablation": str(out)},
        inputs={"grid": str(args.grid), "data": str(args.data), **({"config": str(args.config)} if args.config else {})},
        resolved_config={"base_model": model_values, "train": train_cfg.model_dump(), "grid": grid},
        seed=train_cfg.seed,
    )
