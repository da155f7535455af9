# src/simulation/raster.py
import math
from typing import List, Optional, Sequence

import numpy as np

from ..constants import VEHICLE_LENGTH, VEHICLE_WIDTH
from ..errors import ConfigurationError
from ..logger import logger
from ..schemas import RasterConfig
from .kinematics import AgentState, Pose

# Channel layout: [occupancy x F_r (oldest first), ego mask, road mask, speed map]


def pixel_grid(size: int, meters_per_pixel: float):
    """Ego-frame (x, y) of every pixel centre; row 0 is the far +y edge, column 0 the far -x edge."""
    idx = np.arange(size, dtype=np.float64) + 0.5
    xs = (idx - size / 2.0) * meters_per_pixel
    ys = (size / 2.0 - idx) * meters_per_pixel
    return np.meshgrid(xs, ys)  # gx varies along columns, gy along rows


def world_to_pixel(x: float, y: float, size: int, meters_per_pixel: float):
    """Ego-frame meters to fractional (row, col) pixel coordinates."""
    return size / 2.0 - y / meters_per_pixel - 0.5, x / meters_per_pixel + size / 2.0 - 0.5


def occupancy_frame_indices(n_frames: int, occupancy_frames: int) -> List[int]:
    if occupancy_frames >= n_frames:
        return list(range(n_frames))
    return [int(round(i)) for i in np.linspace(0, n_frames - 1, occupancy_frames)]


def _footprint(agent: AgentState, pose: Pose, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    x0, y0, h0 = pose
    c, s = math.cos(h0), math.sin(h0)
    dx, dy = agent.x - x0, agent.y - y0
    cx, cy = c * dx + s * dy, -s * dx + c * dy
    rel = agent.heading - h0
    cr, sr = math.cos(rel), math.sin(rel)
    px, py = gx - cx, gy - cy
    lx = cr * px + sr * py
    ly = -sr * px + cr * py
    return (np.abs(lx) <= VEHICLE_LENGTH / 2.0) & (np.abs(ly) <= VEHICLE_WIDTH / 2.0)


def _road_mask(pose: Pose, gx: np.ndarray, gy: np.ndarray, road_half_width: float) -> np.ndarray:
    # The road is the world band |y| <= half width; map pixels back to world
    x0, y0, h0 = pose
    world_y = y0 + math.sin(h0) * gx + math.cos(h0) * gy
    return np.abs(world_y) <= road_half_width


def rasterize(
    history: Sequence[Sequence[AgentState]],
    raster_cfg: Optional[RasterConfig] = None,
    road_half_width: float = 6.0,
    ego_id: int = 0,
    pose: Optional[Pose] = None,
) -> np.ndarray:
    """
    Renders past frames into a (C, S, S) float32 raster in the ego frame of the
    last frame. `pose` overrides the ego pose (needed when no ego is present).
    Agents whose footprint misses the grid are dropped and logged.
    """
    cfg = raster_cfg or RasterConfig()
    if not history:
        raise ConfigurationError("rasterize needs at least one history frame")

    last = history[-1]
    if pose is None:
        ego = next((a for a in last if a.agent_id == ego_id), None)
        pose = ego.pose if ego is not None else (0.0, 0.0, 0.0)

    size = cfg.size
    gx, gy = pixel_grid(size, cfg.meters_per_pixel)
    raster = np.zeros((cfg.channels, size, size), dtype=np.float32)

    clipped = set()
    frame_ids = occupancy_frame_indices(len(history), cfg.occupancy_frames)
    for channel, frame_id in enumerate(frame_ids):
        for agent in history[frame_id]:
            mask = _footprint(agent, pose, gx, gy)
            if not mask.any():
                clipped.add(agent.agent_id)
                continue
            raster[channel][mask] = 1.0

    ego_channel = cfg.occupancy_frames
    road_channel = ego_channel + 1
    speed_channel = ego_channel + 2
    for agent in last:
        mask = _footprint(agent, pose, gx, gy)
        if not mask.any():
            continue
        if agent.agent_id == ego_id:
            raster[ego_channel][mask] = 1.0
        level = min(agent.speed / cfg.speed_norm, 1.0)
        raster[speed_channel][mask] = np.maximum(raster[speed_channel][mask], level)

    raster[road_channel] = _road_mask(pose, gx, gy, road_half_width)

    if clipped:
        logger.debug(f"[RASTER] Clipped {len(clipped)} agent(s) outside the raster extent: {sorted(clipped)}")
    return np.clip(raster, 0.0, 1.0)
