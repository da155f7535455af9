# src/utils.py

import functools
import hashlib
import time
from pathlib import Path
from typing import Any, Dict, Type, TypeVar

import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError

from src.config import BASE_DIR, settings
from src.errors import ConfigurationError
from src.logger import logger

M = TypeVar("M", bound=BaseModel)


@functools.lru_cache(maxsize=1)
def build_id() -> str:
    """SHA-1 over the package sources in sorted path order, first 12 hex chars."""
    digest = hashlib.sha1()
    src_root = BASE_DIR / "src"
    for path in sorted(src_root.rglob("*.py")):
        digest.update(path.relative_to(src_root).as_posix().encode("utf-8"))
        digest.update(path.read_bytes())
    return digest.hexdigest()[:12]


def worker_count() -> int:
    return max(1, int(settings.TRAJKIT_THREADS))


def derive_seed(seed: int, *keys: int) -> int:
    """Independent child seed for (seed, keys...); stable across processes."""
    state = np.random.SeedSequence([int(seed), *(int(k) for k in keys)]).generate_state(1)
    return int(state[0])


def read_flat_config(path) -> Dict[str, Any]:
    """
    Parses a flat `key = value` file. Comma-separated values become lists so
    that tuple/list fields (speed_range, stage_depths) validate directly.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError("Config file not found", path=str(path))
    values: Dict[str, Any] = {}
    for key, raw in dotenv_values(path).items():
        if raw is None:
            continue
        raw = raw.strip()
        values[key.strip()] = [part.strip() for part in raw.split(",")] if "," in raw else raw
    logger.debug(f"[CLI] Read {len(values)} keys from {path}")
    return values


def build_config(model_cls: Type[M], values: Dict[str, Any]) -> M:
    """Validates `values` into `model_cls`, surfacing failures as ConfigurationError."""
    try:
        return model_cls(**values)
    except ValidationError as e:
        problems = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
        raise ConfigurationError(f"Invalid {model_cls.__name__}", problems=problems) from e


def route_config(values: Dict[str, Any], *model_classes: Type[BaseModel]) -> Dict[str, Dict[str, Any]]:
    """
    Splits a flat key/value dict across pydantic models by field name.
    Keys owned by none of the models are rejected so typos do not pass silently.
    """
    routed: Dict[str, Dict[str, Any]] = {cls.__name__: {} for cls in model_classes}
    unknown = []
    for key, value in values.items():
        owners = [cls for cls in model_classes if key in cls.model_fields]
        if not owners:
            unknown.append(key)
            continue
        for cls in owners:
            routed[cls.__name__][key] = value
    if unknown:
        raise ConfigurationError("Unknown config keys", keys=sorted(unknown))
    return routed


def timed(tag: str):
    """Logs the wall-clock duration of the wrapped call under `tag`."""
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                logger.info(f"[{tag}] {func.__name__} finished in {time.perf_counter() - start:.2f}s")
        return wrapper
    return decorator

