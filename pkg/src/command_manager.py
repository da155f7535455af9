# src/command_manager.py
import json
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import List

from .commands import (
    CommandResult,
    handle_ablate,
    handle_evaluate,
    handle_generate_data,
    handle_predict,
    handle_retention,
    handle_train,
)
from .config import settings
from .errors import ConfigurationError, FormatError
from .logger import logger
from .schemas import RunManifest
from .utils import build_id

# Routing table: subcommand -> handler
HANDLERS = {
    "generate-data": handle_generate_data,
    "train": handle_train,
    "predict": handle_predict,
    "evaluate": handle_evaluate,
    "retention": handle_retention,
    "ablate": handle_ablate,
}


def manifest_path(output: Path) -> Path:
    return output.with_name(output.name + ".manifest.json")


def write_manifest(subcommand: str, argv: List[str], result: CommandResult, started: datetime, elapsed: float) -> Path:
    manifest = RunManifest(
        subcommand=subcommand,
        argv=list(argv),
        resolved_config=result.resolved_config,
        seed=result.seed,
        inputs=result.inputs,
        outputs=result.outputs,
        tool_version=settings.APP_VERSION,
        build_id=build_id(),
        started_at=started.isoformat(),
        wall_clock_seconds=round(elapsed, 3),
    )
    path = manifest_path(Path(result.primary_output))
    path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    return path


def execute_command(subcommand: str, args, argv: List[str]) -> CommandResult:
    """
    Central dispatcher: routes a parsed subcommand to its handler and writes
    the run manifest beside the primary output.
    """
    handler = HANDLERS.get(subcommand)
    if handler is None:
        raise ConfigurationError(f"Unknown subcommand '{subcommand}'", allowed=sorted(HANDLERS))

    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    logger.info(f"[CLI] {subcommand} started (build {build_id()})")
    result = handler(args)
    elapsed = time.perf_counter() - t0
    path = write_manifest(subcommand, argv, result, started, elapsed)
    logger.info(f"[CLI] {subcommand} finished in {elapsed:.2f}s; manifest {path}")
    return result


def load_manifest(path) -> RunManifest:
    path = Path(path)
    if not path.is_file():
        raise FormatError("Manifest not found", path=str(path))
    try:
        return RunManifest.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except ValueError as e:
        raise FormatError("Manifest is not valid", path=str(path), error=str(e)) from e
