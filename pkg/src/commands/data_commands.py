# src/commands/data_commands.py
from pathlib import Path

from ..logger import logger
from ..schemas import SHIFT_PRESETS, RasterConfig, ShiftConfig
from ..simulation import build_dataset, write_dataset
from ..simulation.dataset import resolve_split
from ..utils import build_config, read_flat_config, route_config
from .base import CommandResult


def handle_generate_data(args) -> CommandResult:
    """Shift-config keys in --config override both presets; raster keys set the rasterizer."""
    values = read_flat_config(args.config) if args.config else {}
    routed = route_config(values, ShiftConfig, RasterConfig)
    raster_cfg = build_config(RasterConfig, routed["RasterConfig"])
    shift_cfgs = {
        name: build_config(ShiftConfig, {**preset.model_dump(), **routed["ShiftConfig"]})
        for name, preset in SHIFT_PRESETS.items()
    }
    split = resolve_split(args.split)

    samples = build_dataset(args.count, args.seed, split, raster_cfg, shift_cfgs)
    out = write_dataset(samples, args.out)
    logger.info(f"[CLI] generate-data: {args.count} scenes ({split}) -> {out}")

    used = list(shift_cfgs) if split == "both" else [split]
    return CommandResult(
        primary_output=Path(out),
        outputs={"dataset": str(out)},
        inputs={"config": str(args.config)} if args.config else {},
        resolved_config={
            "raster": raster_cfg.model_dump(),
            "shift": {name: shift_cfgs[name].model_dump() for name in used},
            "count": args.count,
            "split": split,
        },
        seed=args.seed,
    )
