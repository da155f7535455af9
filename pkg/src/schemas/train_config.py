# src/schemas/train_config.py
from typing import Literal

from pydantic import BaseModel, ConfigDict, field_validator


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    learning_rate: float = 1e-4
    batch_size: int = 32                # 512 at paper scale
    steps: int = 2000
    clip_norm: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    seed: int = 0
    eval_every: int = 200
    checkpoint_path: str = "model.tjkw"
    precision: Literal["double", "single"] = "single"
    holdout_fraction: float = 0.1
    prefetch_batches: int = 4

    @field_validator("learning_rate")
    @classmethod
    def _lr(cls, value):
        # zero keeps the weights fixed; negative rates are not allowed
        if value < 0:
            raise ValueError("learning_rate must be >= 0")
        return value

    @field_validator("clip_norm", "eps")
    @classmethod
    def _positive(cls, value):
        if value <= 0:
            raise ValueError("must be > 0")
        return value

    @field_validator("batch_size", "eval_every", "prefetch_batches")
    @classmethod
    def _at_least_one(cls, value):
        if value < 1:
            raise ValueError("must be >= 1")
        return value

    @field_validator("steps")
    @classmethod
    def _steps(cls, value):
        if value < 0:
            raise ValueError("steps must be >= 0")
        return value

    @field_validator("beta1", "beta2")
    @classmethod
    def _beta(cls, value):
        if not 0 <= value < 1:
            raise ValueError("betas must lie in [0, 1)")
        return value

    @field_validator("weight_decay")
    @classmethod
    def _decay(cls, value):
        if value < 0:
            raise ValueError("weight_decay must be >= 0")
        return value

    @field_validator("holdout_fraction")
    @classmethod
    def _holdout(cls, value):
        if not 0 <= value < 1:
            raise ValueError("holdout_fraction must lie in [0, 1)")
        return value

    def at_paper_scale(self) -> "TrainConfig":
        return self.model_copy(update={"batch_size": 512, "learning_rate": 1e-4, "clip_norm": 1.0})
