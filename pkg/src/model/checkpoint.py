# src/model/checkpoint.py
"""
TJKW checkpoint container.

    magic "TJKW" | u32 version
    config: u8 backbone id | u8 attention flag | u8 head id | u32 K | u32 S | u32 C
    tensors: { u16 name length | name (utf-8) | u8 rank | rank x u32 extents | f32 data }*
    trailer: u32 CRC-32 of every preceding byte

Hyperparameters outside the fixed config block travel as `meta.*` tensors.
"""
import struct
import zlib
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
from pydantic import ValidationError

from ..constants import BACKBONE_IDS, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, HEAD_IDS
from ..errors import ChecksumError, FormatError, IncompatibleModelsError, TruncatedFileError, VersionError
from ..logger import logger
from ..schemas import ModelConfig
from .trajectory_model import TrajectoryModel

PREAMBLE = struct.Struct("<4sI")
CONFIG_BLOCK = struct.Struct("<BBBIII")
NAME_LEN = struct.Struct("<H")
RANK = struct.Struct("<B")
CRC = struct.Struct("<I")

_BACKBONE_NAMES = {v: k for k, v in BACKBONE_IDS.items()}
_HEAD_NAMES = {v: k for k, v in HEAD_IDS.items()}

# meta values are stored as float32; rounding recovers the configured decimals
META_DECIMALS = 6


def _meta_tensors(cfg: ModelConfig) -> List[Tuple[str, np.ndarray]]:
    return [
        ("meta.base_width", np.array([cfg.base_width])),
        ("meta.stage_depths", np.array(cfg.depths)),
        ("meta.attention_window", np.array([cfg.attention_window])),
        ("meta.attention_heads", np.array([cfg.attention_heads])),
        ("meta.nf_alpha", np.array([cfg.nf_alpha])),
        ("meta.loss_weights", np.array([cfg.lambda_nll, cfg.lambda_ade, cfg.lambda_fde])),
    ]


def encode_checkpoint(model: TrajectoryModel) -> bytes:
    cfg = model.cfg
    parts = [
        PREAMBLE.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION),
        CONFIG_BLOCK.pack(
            BACKBONE_IDS[cfg.backbone], int(cfg.attention), HEAD_IDS[cfg.head],
            cfg.hidden_width, cfg.raster_size, cfg.channels,
        ),
    ]
    for name, data in _meta_tensors(cfg) + list(model.state_dict().items()):
        raw = name.encode("utf-8")
        arr = np.ascontiguousarray(data, dtype="<f4")
        parts.append(NAME_LEN.pack(len(raw)) + raw + RANK.pack(arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    body = b"".join(parts)
    return body + CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


def save_checkpoint(model: TrajectoryModel, path) -> Path:
    path = Path(path)
    payload = encode_checkpoint(model)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    tmp.replace(path)
    logger.info(f"[CHECKPOINT] Saved {model.num_parameters()} parameters to {path}")
    return path


def _take(blob: bytes, offset: int, size: int, end: int, source: str) -> int:
    if offset + size > end:
        raise TruncatedFileError("Checkpoint ends inside a record", path=source, offset=offset)
    return offset + size


def decode_checkpoint(blob: bytes, source: str = "<bytes>") -> Tuple[ModelConfig, Dict[str, np.ndarray]]:
    if len(blob) < PREAMBLE.size + CONFIG_BLOCK.size + CRC.size:
        raise TruncatedFileError("Checkpoint is too short", path=source, size=len(blob))
    magic, version = PREAMBLE.unpack_from(blob, 0)
    if magic != CHECKPOINT_MAGIC:
        raise VersionError("Not a TJKW checkpoint (bad magic)", path=source, magic=magic)
    if version != CHECKPOINT_VERSION:
        raise VersionError("Unsupported checkpoint version", path=source, version=version, expected=CHECKPOINT_VERSION)

    end = len(blob) - CRC.size
    (stored_crc,) = CRC.unpack_from(blob, end)
    if zlib.crc32(blob[:end]) & 0xFFFFFFFF != stored_crc:
        raise ChecksumError("Checkpoint CRC mismatch", path=source)

    backbone_id, attention, head_id, hidden, size, channels = CONFIG_BLOCK.unpack_from(blob, PREAMBLE.size)
    if backbone_id not in _BACKBONE_NAMES or head_id not in _HEAD_NAMES:
        raise FormatError("Unknown backbone or head id", path=source, backbone=backbone_id, head=head_id)

    tensors: Dict[str, np.ndarray] = {}
    offset = PREAMBLE.size + CONFIG_BLOCK.size
    while offset < end:
        start = offset
        offset = _take(blob, offset, NAME_LEN.size, end, source)
        (name_len,) = NAME_LEN.unpack_from(blob, start)
        name_start = offset
        offset = _take(blob, offset, name_len + RANK.size, end, source)
        name = blob[name_start:name_start + name_len].decode("utf-8")
        (rank,) = RANK.unpack_from(blob, name_start + name_len)
        dims_start = offset
        offset = _take(blob, offset, 4 * rank, end, source)
        shape = struct.unpack_from(f"<{rank}I", blob, dims_start)
        count = int(np.prod(shape)) if rank else 1
        data_start = offset
        offset = _take(blob, offset, 4 * count, end, source)
        tensors[name] = np.frombuffer(blob, dtype="<f4", count=count, offset=data_start).reshape(shape).copy()

    def meta(key: str) -> np.ndarray:
        if key not in tensors:
            raise FormatError("Checkpoint is missing a meta tensor", path=source, name=key)
        return tensors.pop(key)

    weights = meta("meta.loss_weights")
    values = dict(
        backbone=_BACKBONE_NAMES[backbone_id],
        attention=bool(attention),
        head=_HEAD_NAMES[head_id],
        hidden_width=hidden,
        raster_size=size,
        channels=channels,
        base_width=int(meta("meta.base_width")[0]),
        stage_depths=[int(d) for d in meta("meta.stage_depths")],
        attention_window=int(meta("meta.attention_window")[0]),
        attention_heads=int(meta("meta.attention_heads")[0]),
        nf_alpha=round(float(meta("meta.nf_alpha")[0]), META_DECIMALS),
        lambda_nll=round(float(weights[0]), META_DECIMALS),
        lambda_ade=round(float(weights[1]), META_DECIMALS),
        lambda_fde=round(float(weights[2]), META_DECIMALS),
    )
    try:
        cfg = ModelConfig(**values)
    except ValidationError as e:
        raise FormatError("Checkpoint carries an invalid model config", path=source, problems=str(e)) from e
    return cfg, tensors


def load_checkpoint(path, dtype=None) -> TrajectoryModel:
    path = Path(path)
    if not path.is_file():
        raise FormatError("Checkpoint file not found", path=str(path))
    cfg, state = decode_checkpoint(path.read_bytes(), str(path))
    model = TrajectoryModel(cfg, seed=0, dtype=dtype)
    model.load_state(state)
    logger.info(f"[CHECKPOINT] Loaded {cfg.label} from {path}")
    return model


# Fields that must agree for models to score each other's candidates
COMPATIBILITY_FIELDS = ("channels", "raster_size")


def check_compatible(models: List[TrajectoryModel]) -> None:
    if not models:
        raise IncompatibleModelsError("At least one model is required")
    ref = models[0].cfg
    mismatched = sorted({
        field
        for m in models[1:]
        for field in COMPATIBILITY_FIELDS
        if getattr(m.cfg, field) != getattr(ref, field)
    })
    if mismatched:
        raise IncompatibleModelsError("Model configs disagree", fields=mismatched)
