import numpy as np
import pytest

from src.constants import FUTURE_STEPS
from src.errors import ConfigurationError, FormatError, ShapeError, TruncatedFileError, VersionError
from src.schemas import RasterConfig
from src.simulation import (
    SceneSample,
    build_dataset,
    decode_dataset,
    encode_dataset,
    read_dataset,
    read_header,
    write_dataset,
)
from src.simulation.dataset import HEADER, record_dtype, resolve_split


def test_round_trip_100_samples(tmp_path):
    samples = build_dataset(100, seed=4, split="both", raster_cfg=RasterConfig(size=16))
    path = write_dataset(samples, tmp_path / "a.trjk")
    loaded = read_dataset(path)

    assert len(loaded) == 100
    for src, got in zip(samples, loaded):
        assert got.scene_id == src.scene_id
        assert got.split_tag == src.split_tag
        np.testing.assert_array_equal(got.raster, src.raster)
        np.testing.assert_array_equal(got.future, src.future.astype(np.float32))


def test_second_write_is_byte_identical(tmp_path, tiny_samples):
    first = encode_dataset(tiny_samples)
    again = encode_dataset(decode_dataset(first))
    assert again == first


def test_header_fields(tiny_dataset_file, tiny_samples):
    header = read_header(tiny_dataset_file)
    assert (header.version, header.channels, header.size, header.steps, header.count) == (
        1, tiny_samples[0].raster.shape[0], 16, FUTURE_STEPS, len(tiny_samples)
    )


def test_file_size_matches_layout(tmp_path):
    cfg = RasterConfig(size=16)
    samples = build_dataset(10, seed=0, raster_cfg=cfg)
    path = write_dataset(samples, tmp_path / "b.trjk")
    per_record = 8 + 1 + cfg.channels * 16 * 16 * 4 + FUTURE_STEPS * 2 * 4
    assert path.stat().st_size == HEADER.size + 10 * per_record
    assert record_dtype(cfg.channels, 16).itemsize == per_record


def test_flipped_magic_is_version_error(tiny_dataset_file):
    blob = bytearray(tiny_dataset_file.read_bytes())
    blob[0] ^= 0xFF
    with pytest.raises(VersionError):
        decode_dataset(bytes(blob))


def test_unknown_version_is_version_error(tiny_dataset_file):
    blob = bytearray(tiny_dataset_file.read_bytes())
    blob[4] = 9
    with pytest.raises(VersionError):
        decode_dataset(bytes(blob))


def test_truncated_file_errors(tiny_dataset_file):
    blob = tiny_dataset_file.read_bytes()
    with pytest.raises(TruncatedFileError):
        decode_dataset(blob[:10])
    with pytest.raises(TruncatedFileError):
        decode_dataset(blob[:-3])


def test_trailing_bytes_are_rejected(tiny_dataset_file):
    with pytest.raises(FormatError):
        decode_dataset(tiny_dataset_file.read_bytes() + b"\x00")


def test_mismatched_record_shapes_are_rejected(tiny_samples):
    odd = SceneSample(99, "in_domain", np.zeros((3, 16, 16), dtype=np.float32), np.zeros((FUTURE_STEPS, 2)))
    with pytest.raises(ShapeError):
        encode_dataset(list(tiny_samples) + [odd])


def test_empty_dataset_is_rejected():
    with pytest.raises(ConfigurationError):
        encode_dataset([])


def test_build_dataset_is_deterministic_and_alternates_splits():
    cfg = RasterConfig(size=16)
    a = build_dataset(6, seed=9, split="both", raster_cfg=cfg)
    b = build_dataset(6, seed=9, split="both", raster_cfg=cfg)
    assert encode_dataset(a) == encode_dataset(b)
    assert [s.split_tag for s in a] == ["in_domain", "shifted"] * 3
    assert [s.scene_id for s in a] == list(range(6))


def test_resolve_split_aliases():
    assert resolve_split("in") == "in_domain"
    assert resolve_split("shifted") == "shifted"
    with pytest.raises(ConfigurationError):
        resolve_split("sideways")
