# src/simulation/scene.py
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..constants import FUTURE_STEPS, PAST_STEPS, SPLIT_TAGS
from ..errors import ConfigurationError
from ..schemas import RasterConfig, ShiftConfig
from .kinematics import AgentState, simulate_agent, to_ego_frame, track_positions
from .raster import rasterize

EGO_ID = 0
SCENE_FRAMES = PAST_STEPS + FUTURE_STEPS
# Other agents are spawned within this longitudinal window around the ego (m)
SPAWN_HALF_LENGTH = 40.0


@dataclass
class SceneSample:
    scene_id: int
    split_tag: str
    raster: np.ndarray   # (C, S, S) float32 in [0, 1]
    future: np.ndarray   # (T, 2) meters, ego frame at the last past frame

    def __post_init__(self):
        if self.split_tag not in SPLIT_TAGS:
            raise ConfigurationError(f"Unknown split tag '{self.split_tag}'", allowed=sorted(SPLIT_TAGS))


@dataclass
class SimulatedScene:
    tracks: List[List[AgentState]]   # one track per agent, SCENE_FRAMES states each

    def frame(self, index: int) -> List[AgentState]:
        return [track[index] for track in self.tracks]

    @property
    def ego(self) -> List[AgentState]:
        return self.tracks[EGO_ID]


def _draw_behaviour(cfg: ShiftConfig, rng: np.random.Generator):
    lo, hi = cfg.speed_range
    speed = float(rng.uniform(lo, hi)) if hi > lo else float(lo)
    turn = float(np.clip(rng.normal(cfg.turn_rate_mean, cfg.turn_rate_sigma), -cfg.max_turn_rate, cfg.max_turn_rate))
    accel = float(rng.normal(0.0, cfg.accel_sigma)) if cfg.accel_sigma > 0 else 0.0
    return speed, turn, accel


def simulate_scene(cfg: ShiftConfig, seed: int) -> SimulatedScene:
    """Rolls every agent forward SCENE_FRAMES frames; agent 0 is the prediction target."""
    if cfg.speed_range[1] == 0 and cfg.agent_count_range[1] == 0:
        raise ConfigurationError("Degenerate shift config: zero max speed and no agents")

    rng = np.random.default_rng([int(cfg.seed), int(seed)])

    speed, turn, accel = _draw_behaviour(cfg, rng)
    lane_offset = float(rng.uniform(-0.5, 0.5) * cfg.road_half_width)
    ego = AgentState(0.0, lane_offset, 0.0, speed, accel, turn, agent_id=EGO_ID)
    tracks = [simulate_agent(ego, SCENE_FRAMES)]

    lo, hi = cfg.agent_count_range
    n_agents = int(rng.integers(lo, hi + 1))
    for agent_id in range(1, n_agents + 1):
        speed, turn, accel = _draw_behaviour(cfg, rng)
        oncoming = bool(rng.random() < 0.5)
        x = float(rng.uniform(-SPAWN_HALF_LENGTH, SPAWN_HALF_LENGTH))
        y = float(rng.uniform(-cfg.road_half_width, cfg.road_half_width))
        heading = math.pi if oncoming else 0.0
        tracks.append(simulate_agent(AgentState(x, y, heading, speed, accel, turn, agent_id=agent_id), SCENE_FRAMES))
    return SimulatedScene(tracks=tracks)


def generate_scene(
    cfg: ShiftConfig,
    seed: int,
    raster_cfg: Optional[RasterConfig] = None,
    scene_id: Optional[int] = None,
    split_tag: str = "in_domain",
) -> SceneSample:
    """
    Pure function of (cfg, seed): simulates 10 s, rasterizes the first 5 s and
    returns the target's last 5 s in the ego frame of the last past frame.
    """
    scene = simulate_scene(cfg, seed)
    history = [scene.frame(i) for i in range(PAST_STEPS)]
    pose = scene.ego[PAST_STEPS - 1].pose
    raster = rasterize(history, raster_cfg, road_half_width=cfg.road_half_width, ego_id=EGO_ID, pose=pose)
    future = to_ego_frame(track_positions(scene.ego[PAST_STEPS:]), pose)
    return SceneSample(
        scene_id=int(seed if scene_id is None else scene_id),
        split_tag=split_tag,
        raster=raster,
        future=future,
    )
