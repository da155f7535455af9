# src/schemas/shift_config.py
from typing import Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class ShiftConfig(BaseModel):
    """
    Behaviour-parameter distribution a scene is drawn from. Domain shift is
    expressed only through these knobs; the map never changes.
    """
    model_config = ConfigDict(frozen=True)

    speed_range: Tuple[float, float] = (4.0, 12.0)          # m/s at the first simulated frame
    turn_rate_mean: float = 0.0                             # rad/s
    turn_rate_sigma: float = 0.05                           # rad/s
    max_turn_rate: float = 0.6                              # |turn_rate| clip, rad/s
    accel_sigma: float = 0.3                                # m/s^2
    agent_count_range: Tuple[int, int] = (2, 6)             # agents besides the ego
    road_half_width: float = 6.0                            # meters
    seed: int = 0

    @field_validator("speed_range", "agent_count_range")
    @classmethod
    def _ordered_range(cls, value):
        lo, hi = value
        if lo > hi:
            raise ValueError(f"range min {lo} exceeds max {hi}")
        if lo < 0:
            raise ValueError("range bounds must be non-negative")
        return value

    @field_validator("turn_rate_sigma", "accel_sigma", "max_turn_rate", "road_half_width")
    @classmethod
    def _non_negative(cls, value):
        if value < 0:
            raise ValueError("must be >= 0")
        return value

    @model_validator(mode="after")
    def _turn_mean_within_limit(self):
        if abs(self.turn_rate_mean) > self.max_turn_rate:
            raise ValueError("turn_rate_mean exceeds max_turn_rate")
        return self


class RasterConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    size: int = 64                      # S; 128 at paper scale
    meters_per_pixel: float = 0.5
    occupancy_frames: int = 5           # F_r past frames kept as occupancy channels
    speed_norm: float = 20.0            # m/s mapped to 1.0 in the speed channel

    @field_validator("size")
    @classmethod
    def _min_size(cls, value):
        if value < 16:
            raise ValueError("raster size must be >= 16")
        return value

    @field_validator("occupancy_frames")
    @classmethod
    def _frames(cls, value):
        if not 1 <= value <= 25:
            raise ValueError("occupancy_frames must be within 1..25")
        return value

    @field_validator("meters_per_pixel", "speed_norm")
    @classmethod
    def _positive(cls, value):
        if value <= 0:
            raise ValueError("must be > 0")
        return value

    @property
    def channels(self) -> int:
        # occupancy frames + ego mask + road mask + speed map
        return self.occupancy_frames + 3


IN_DOMAIN = ShiftConfig()

SHIFTED = ShiftConfig(
    speed_range=(8.0, 18.0),
    turn_rate_sigma=0.18,
    accel_sigma=0.7,
    agent_count_range=(4, 10),
)

SHIFT_PRESETS = {"in_domain": IN_DOMAIN, "shifted": SHIFTED}
