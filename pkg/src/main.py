# src/main.py
import argparse
import sys
from typing import List, Optional

import sentry_sdk

from src.autodiff import set_default_precision
from src.command_manager import execute_command, load_manifest
from src.config import settings
from src.constants import EXIT_OK
from src.errors import TrajkitError
from src.evaluation import METRICS
from src.logger import logger
from src.utils import build_id


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trajkit", description=settings.APP_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"{settings.APP_NAME} {settings.APP_VERSION} ({build_id()})")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate-data", help="Simulate scenes and write a TRJK dataset")
    gen.add_argument("--config", help="flat key = value file with ShiftConfig / RasterConfig overrides")
    gen.add_argument("--out", required=True)
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--split", choices=["in", "shifted", "both"], default="in")

    tr = sub.add_parser("train", help="Train one model and write a TJKW checkpoint")
    tr.add_argument("--config", help="flat key = value file with ModelConfig / TrainConfig fields")
    tr.add_argument("--data", required=True)
    tr.add_argument("--out", required=True)
    tr.add_argument("--log", help="training log CSV (default: <out>.log.csv)")
    tr.add_argument("--paper-scale", action="store_true", help="batch 512, lr 1e-4, raster 128")

    pr = sub.add_parser("predict", help="Predict with one checkpoint or a worst-case ensemble")
    pr.add_argument("--models", required=True, help="comma-separated checkpoint paths")
    pr.add_argument("--data", required=True)
    pr.add_argument("--samples", type=int, default=1, help="sampled candidates per ensemble member")
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--out", required=True)
    pr.add_argument("--selection", choices=["max", "min"], default="max",
                    help="pick the plan with the highest (max) or lowest (min) worst-case score")

    ev = sub.add_parser("evaluate", help="Score predictions against a dataset")
    ev.add_argument("--pred", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--metric", choices=list(METRICS), default="ade")
    ev.add_argument("--out", required=True)

    rt = sub.add_parser("retention", help="Retention curve from a CSV of error,uncertainty")
    rt.add_argument("--input", required=True)
    rt.add_argument("--out", required=True)

    ab = sub.add_parser("ablate", help="Train and evaluate every row of a grid file")
    ab.add_argument("--grid", required=True)
    ab.add_argument("--data", required=True)
    ab.add_argument("--out-dir", required=True)
    ab.add_argument("--config", help="base ModelConfig / TrainConfig fields shared by all rows")

    rp = sub.add_parser("replay", help="Re-run the command recorded in a manifest")
    rp.add_argument("--manifest", required=True)
    return parser


def run(argv: List[str]) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "replay":
        manifest = load_manifest(args.manifest)
        logger.info(f"[CLI] Replaying {manifest.subcommand} recorded by build {manifest.build_id}")
        return run(manifest.argv)
    set_default_precision(settings.TRAJKIT_PRECISION)
    execute_command(args.command, args, argv)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return run(argv)
    except TrajkitError as e:
        logger.error(f"[CLI] {type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        sentry_sdk.capture_exception(e)
        logger.exception(f"[CLI] Unhandled error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
