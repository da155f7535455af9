# src/simulation/dataset.py
"""
TRJK dataset container.

    magic "TRJK" | u32 version | u32 C | u32 S | u32 T | u32 N
    N x { u64 scene_id | u8 split_tag | C*S*S f32 raster | T*2 f32 future }

All integers and floats little-endian, records packed with no padding.
"""
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..constants import DATASET_MAGIC, DATASET_VERSION, FUTURE_STEPS, SPLIT_NAMES, SPLIT_TAGS
from ..errors import ConfigurationError, FormatError, ShapeError, TruncatedFileError, VersionError
from ..logger import logger
from ..schemas import SHIFT_PRESETS, RasterConfig, ShiftConfig
from ..utils import derive_seed, timed, worker_count
from .scene import SceneSample, generate_scene

HEADER = struct.Struct("<4sIIIII")


@dataclass(frozen=True)
class DatasetHeader:
    version: int
    channels: int
    size: int
    steps: int
    count: int


def record_dtype(channels: int, size: int, steps: int = FUTURE_STEPS) -> np.dtype:
    return np.dtype([
        ("scene_id", "<u8"),
        ("split", "u1"),
        ("raster", "<f4", (channels, size, size)),
        ("future", "<f4", (steps, 2)),
    ])


def encode_dataset(samples: Sequence[SceneSample]) -> bytes:
    if not samples:
        raise ConfigurationError("Refusing to write an empty dataset")
    channels, size, _ = samples[0].raster.shape
    steps = samples[0].future.shape[0]
    records = np.zeros(len(samples), dtype=record_dtype(channels, size, steps))
    for i, sample in enumerate(samples):
        if sample.raster.shape != (channels, size, size) or sample.future.shape != (steps, 2):
            raise ShapeError(
                "write_dataset",
                (channels, size, size), sample.raster.shape,
                detail=f"scene {sample.scene_id} does not match the first record's shape",
            )
        records[i] = (sample.scene_id, SPLIT_TAGS[sample.split_tag], sample.raster, sample.future)
    header = HEADER.pack(DATASET_MAGIC, DATASET_VERSION, channels, size, steps, len(samples))
    return header + records.tobytes()


def write_dataset(samples: Sequence[SceneSample], path) -> Path:
    path = Path(path)
    payload = encode_dataset(samples)
    path.write_bytes(payload)
    logger.info(f"[DATASET] Wrote {len(samples)} scenes to {path} ({len(payload)} bytes)")
    return path


def parse_header(blob: bytes, source: str = "<bytes>") -> DatasetHeader:
    if len(blob) < HEADER.size:
        raise TruncatedFileError("Dataset header is truncated", path=source, size=len(blob))
    magic, version, channels, size, steps, count = HEADER.unpack_from(blob, 0)
    if magic != DATASET_MAGIC:
        raise VersionError("Not a TRJK dataset (bad magic)", path=source, magic=magic)
    if version != DATASET_VERSION:
        raise VersionError("Unsupported dataset version", path=source, version=version, expected=DATASET_VERSION)
    return DatasetHeader(version, channels, size, steps, count)


def decode_dataset(blob: bytes, source: str = "<bytes>") -> List[SceneSample]:
    header = parse_header(blob, source)
    dtype = record_dtype(header.channels, header.size, header.steps)
    expected = HEADER.size + header.count * dtype.itemsize
    if len(blob) < expected:
        raise TruncatedFileError(
            "Dataset body is truncated", path=source, expected_bytes=expected, actual_bytes=len(blob)
        )
    if len(blob) > expected:
        raise FormatError("Trailing bytes after the last record", path=source, extra=len(blob) - expected)

    records = np.frombuffer(blob, dtype=dtype, count=header.count, offset=HEADER.size)
    samples = []
    for rec in records:
        tag = int(rec["split"])
        if tag not in SPLIT_NAMES:
            raise FormatError("Unknown split tag in record", path=source, scene_id=int(rec["scene_id"]), tag=tag)
        samples.append(SceneSample(
            scene_id=int(rec["scene_id"]),
            split_tag=SPLIT_NAMES[tag],
            raster=np.array(rec["raster"], dtype=np.float32),
            future=np.array(rec["future"], dtype=np.float64),
        ))
    return samples


def read_dataset(path) -> List[SceneSample]:
    path = Path(path)
    if not path.is_file():
        raise FormatError("Dataset file not found", path=str(path))
    samples = decode_dataset(path.read_bytes(), str(path))
    logger.info(f"[DATASET] Read {len(samples)} scenes from {path}")
    return samples


def read_header(path) -> DatasetHeader:
    path = Path(path)
    if not path.is_file():
        raise FormatError("Dataset file not found", path=str(path))
    with open(path, "rb") as fh:
        return parse_header(fh.read(HEADER.size), str(path))


def resolve_split(split: str) -> str:
    aliases = {"in": "in_domain", "in_domain": "in_domain", "shifted": "shifted", "both": "both"}
    if split not in aliases:
        raise ConfigurationError(f"Unknown split '{split}'", allowed=sorted(aliases))
    return aliases[split]


@timed("SCENE-SIM")
def build_dataset(
    count: int,
    seed: int,
    split: str = "in_domain",
    raster_cfg: Optional[RasterConfig] = None,
    shift_cfgs: Optional[Dict[str, ShiftConfig]] = None,
) -> List[SceneSample]:
    """
    Generates `count` scenes in parallel. Scene i uses seed derive_seed(seed, i)
    and scene_id i; split "both" alternates in_domain / shifted.
    """
    if count < 1:
        raise ConfigurationError("count must be >= 1", count=count)
    split = resolve_split(split)
    cfgs = dict(SHIFT_PRESETS)
    cfgs.update(shift_cfgs or {})
    raster_cfg = raster_cfg or RasterConfig()

    def make(index: int) -> SceneSample:
        name = split if split != "both" else ("in_domain", "shifted")[index % 2]
        return generate_scene(cfgs[name], derive_seed(seed, index), raster_cfg, scene_id=index, split_tag=name)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        samples = list(pool.map(make, range(count)))
    logger.info(f"[SCENE-SIM] Generated {count} scenes (split={split}, seed={seed})")
    return samples
