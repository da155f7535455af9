# src/commands/eval_commands.py
from pathlib import Path

from ..evaluation import evaluate, retention_from_csv
from ..logger import logger
from .base import CommandResult


def handle_evaluate(args) -> CommandResult:
    report = evaluate(args.pred, args.data, args.metric)
    out = report.write_csv(args.out)
    outputs = {"report": str(out)}
    for split, curve in report.curves.items():
        curve_path = out.with_name(f"{out.stem}.{split}.curve.csv")
        curve.to_frame().to_csv(curve_path, index=False)
        outputs[f"curve_{split}"] = str(curve_path)
    logger.info(f"[CLI] evaluate: {args.metric} report -> {out}")
    return CommandResult(
        primary_output=out,
        outputs=outputs,
        inputs={"pred": str(args.pred), "data": str(args.data)},
        resolved_config={"metric": args.metric},
    )


def handle_retention(args) -> CommandResult:
    curve = retention_from_csv(args.input)
    out = Path(args.out)
    curve.to_frame().to_csv(out, index=False)
    logger.info(f"[CLI] retention: r_auc={curve.r_auc:.6f} -> {out}")
    return CommandResult(
        primary_output=out,
        outputs={"curve": str(out)},
        inputs={"input": str(args.input)},
        resolved_config={"r_auc": curve.r_auc},
    )
