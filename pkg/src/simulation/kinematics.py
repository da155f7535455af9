# src/simulation/kinematics.py
"""
Constant-turn-rate-and-acceleration agent kinematics at the dataset frame rate.
"""
import math
from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple

import numpy as np

from ..constants import DT

TURN_RATE_EPS = 1e-9

Pose = Tuple[float, float, float]


@dataclass(frozen=True)
class AgentState:
    x: float
    y: float
    heading: float
    speed: float
    accel: float
    turn_rate: float
    agent_id: int = 0

    @property
    def pose(self) -> Pose:
        return (self.x, self.y, self.heading)

    def is_valid(self, max_turn_rate: float) -> bool:
        values = (self.x, self.y, self.heading, self.speed, self.accel, self.turn_rate)
        return (
            all(math.isfinite(v) for v in values)
            and self.speed >= 0.0
            and abs(self.turn_rate) <= max_turn_rate + 1e-12
        )


def step_agent(state: AgentState, dt: float = DT) -> AgentState:
    """
    Advances one frame. Position follows the exact arc for the mean speed over
    the frame; speed is floored at zero (agents brake to a stop, never reverse).
    """
    v_next = max(state.speed + state.accel * dt, 0.0)
    v_mid = 0.5 * (state.speed + v_next)
    h0 = state.heading
    h1 = h0 + state.turn_rate * dt
    if abs(state.turn_rate) < TURN_RATE_EPS:
        dx = v_mid * dt * math.cos(h0)
        dy = v_mid * dt * math.sin(h0)
    else:
        radius = v_mid / state.turn_rate
        dx = radius * (math.sin(h1) - math.sin(h0))
        dy = -radius * (math.cos(h1) - math.cos(h0))
    return replace(state, x=state.x + dx, y=state.y + dy, heading=h1, speed=v_next)


def simulate_agent(initial: AgentState, n_frames: int, dt: float = DT) -> List[AgentState]:
    states = [initial]
    for _ in range(n_frames - 1):
        states.append(step_agent(states[-1], dt))
    return states


def to_ego_frame(points: np.ndarray, pose: Pose) -> np.ndarray:
    """World (N, 2) points into the frame centred on `pose` with heading along +x."""
    x0, y0, h = pose
    c, s = math.cos(h), math.sin(h)
    d = np.asarray(points, dtype=np.float64) - np.array([x0, y0])
    return np.stack([c * d[..., 0] + s * d[..., 1], -s * d[..., 0] + c * d[..., 1]], axis=-1)


def track_positions(track: Sequence[AgentState]) -> np.ndarray:
    return np.array([[s.x, s.y] for s in track], dtype=np.float64)
