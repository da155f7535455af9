# src/schemas/model_config.py
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

# Declarative backbone presets.
# 'key' is the internal preset id written into checkpoints.
# 'block' selects the residual unit: 'nf' (normalizer-free) or 'dws' (depthwise-separable).
# 'stage_depths' is the number of blocks in each of the four stages.
# 'aliases' are accepted spellings in config files and grid files.
BACKBONE_PRESETS = [
    {"key": "nf18", "label": "NF micro-18", "block": "nf", "stage_depths": [2, 2, 2, 2], "aliases": ["nfnet18", "NFNet18", "nf-18"]},
    {"key": "nf50", "label": "NF micro-50", "block": "nf", "stage_depths": [3, 4, 6, 3], "aliases": ["nfnet50", "NFNet50", "nf-50"]},
    {"key": "dws-baseline", "label": "Depthwise-separable baseline", "block": "dws", "stage_depths": [1, 1, 1, 1], "aliases": ["dws", "mobilenet", "MobileNet", "baseline"]},
]

# Channel multipliers applied to base_width per stage
STAGE_WIDTH_MULTIPLIERS = [1, 2, 4, 8]


def resolve_backbone(name: str) -> dict:
    for preset in BACKBONE_PRESETS:
        if name == preset["key"] or name in preset["aliases"]:
            return preset
    raise ValueError(f"unknown backbone '{name}'; choose one of {[p['key'] for p in BACKBONE_PRESETS]}")


def feature_map_size(raster_size: int) -> int:
    """Spatial extent after the stride-2 stem and stages 1-3 (stage 0 keeps resolution)."""
    size = raster_size
    for _ in range(4):
        size = (size + 1) // 2
    return size


class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    backbone: Literal["nf18", "nf50", "dws-baseline"] = "nf18"
    attention: bool = True
    head: Literal["bc", "dim"] = "bc"
    hidden_width: int = 64                  # K
    raster_size: int = 64                   # S
    channels: int = 8                       # C
    base_width: int = 16
    stage_depths: Optional[List[int]] = None
    attention_window: int = 4
    attention_heads: int = 2
    nf_alpha: float = 0.2
    lambda_nll: float = 1.0
    lambda_ade: float = 1.0
    lambda_fde: float = 1.0

    @field_validator("backbone", mode="before")
    @classmethod
    def _resolve_alias(cls, value):
        return resolve_backbone(str(value))["key"]

    @field_validator("hidden_width", "raster_size", "channels", "base_width", "attention_window", "attention_heads")
    @classmethod
    def _positive(cls, value):
        if value <= 0:
            raise ValueError("must be > 0")
        return value

    @field_validator("lambda_nll", "lambda_ade", "lambda_fde")
    @classmethod
    def _non_negative_weight(cls, value):
        if value < 0:
            raise ValueError("loss weights must be >= 0")
        return value

    @field_validator("stage_depths")
    @classmethod
    def _four_stages(cls, value):
        if value is not None and (len(value) != 4 or any(d < 1 for d in value)):
            raise ValueError("stage_depths needs four positive entries")
        return value

    @model_validator(mode="after")
    def _cross_field_checks(self):
        if self.lambda_nll == 0 and self.lambda_ade == 0 and self.lambda_fde == 0:
            raise ValueError("loss weights must not all be zero")
        if self.attention:
            width = self.final_width
            if width % self.attention_heads:
                raise ValueError(f"feature width {width} not divisible by attention_heads {self.attention_heads}")
            extent = feature_map_size(self.raster_size)
            if extent % self.attention_window:
                raise ValueError(
                    f"feature map extent {extent} (raster {self.raster_size}) not divisible by attention_window {self.attention_window}"
                )
        return self

    @property
    def preset(self) -> dict:
        return resolve_backbone(self.backbone)

    @property
    def depths(self) -> List[int]:
        return list(self.stage_depths or self.preset["stage_depths"])

    @property
    def stage_widths(self) -> List[int]:
        return [self.base_width * m for m in STAGE_WIDTH_MULTIPLIERS]

    @property
    def final_width(self) -> int:
        return self.stage_widths[-1]

    @property
    def head_width(self) -> int:
        # bc: mu(2) + log_sigma(2); dim: mu(2) + log diag(2) + off-diagonal(1)
        return 4 if self.head == "bc" else 5

    @property
    def loss_weights(self) -> "LossWeights":
        return LossWeights(nll=self.lambda_nll, ade=self.lambda_ade, fde=self.lambda_fde)

    @property
    def label(self) -> str:
        parts = [self.head.upper(), self.preset["label"]]
        if self.attention:
            parts.append("Attention")
        if self.lambda_ade > 0 or self.lambda_fde > 0:
            parts.append("ADE Loss")
        return " + ".join(parts)


class LossWeights(BaseModel):
    model_config = ConfigDict(frozen=True)

    nll: float = 1.0
    ade: float = 1.0
    fde: float = 1.0
