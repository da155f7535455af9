import os

# Pin process settings before src.config builds its singleton
os.environ["TRAJKIT_LOG_FILE"] = ""
os.environ["SENTRY_DSN"] = ""
os.environ["TRAJKIT_THREADS"] = "2"
os.environ["TRAJKIT_PRECISION"] = "double"

import numpy as np
import pytest

from src.autodiff import set_default_precision
from src.config import settings
from src.schemas import ModelConfig, RasterConfig, TrainConfig


@pytest.fixture(autouse=True)
def global_settings(monkeypatch):
    # 1. Settings: no log file, no sentry, double precision
    monkeypatch.setattr(settings, "TRAJKIT_LOG_FILE", "")
    monkeypatch.setattr(settings, "SENTRY_DSN", "")
    monkeypatch.setattr(settings, "TRAJKIT_PRECISION", "double")
    monkeypatch.setattr(settings, "TRAJKIT_THREADS", 2)

    # 2. Tensor default dtype
    set_default_precision("double")
    yield
    set_default_precision("double")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_raster_cfg():
    return RasterConfig(size=16, occupancy_frames=2)


@pytest.fixture
def tiny_model_cfg(tiny_raster_cfg):
    """Micro BC model over 16x16 rasters; the final feature map is 1x1."""
    return ModelConfig(
        backbone="nf18",
        attention=True,
        head="bc",
        hidden_width=8,
        raster_size=tiny_raster_cfg.size,
        channels=tiny_raster_cfg.channels,
        base_width=4,
        stage_depths=[1, 1, 1, 1],
        attention_window=1,
        attention_heads=2,
    )


@pytest.fixture
def tiny_train_cfg(tmp_path):
    return TrainConfig(
        learning_rate=1e-3,
        batch_size=4,
        steps=3,
        eval_every=2,
        seed=7,
        precision="double",
        holdout_fraction=0.25,
        checkpoint_path=str(tmp_path / "model.tjkw"),
    )


@pytest.fixture
def tiny_samples(tiny_raster_cfg):
    from src.simulation import build_dataset
    return build_dataset(8, seed=3, split="both", raster_cfg=tiny_raster_cfg)


@pytest.fixture
def tiny_dataset_file(tmp_path, tiny_samples):
    from src.simulation import write_dataset
    return write_dataset(tiny_samples, tmp_path / "scenes.trjk")
