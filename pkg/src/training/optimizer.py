# src/training/optimizer.py
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from ..autodiff import Tensor
from ..blocks import is_decay_exempt
from ..errors import ShapeError
from ..logger import logger
from ..schemas import TrainConfig


@dataclass
class AdamState:
    step: int = 0
    faults: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values())))


def clip_global_norm(grads: Mapping[str, np.ndarray], max_norm: float = 1.0) -> Dict[str, np.ndarray]:
    """Scales every gradient by max_norm / norm when the joint L2 norm exceeds max_norm."""
    norm = global_norm(grads)
    if norm <= max_norm:
        return dict(grads)
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}


def adamw_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    cfg: TrainConfig,
) -> bool:
    """
    One AdamW update with decoupled weight decay; bias and gain tensors are not
    decayed. Returns False (and counts a fault) when any gradient is non-finite.
    """
    for name, p in params.items():
        g = grads.get(name)
        if g is not None and np.shape(g) != p.shape:
            raise ShapeError("adamw_step", p.shape, np.shape(g), detail=f"gradient for {name}")
    if not all(np.all(np.isfinite(g)) for g in grads.values()):
        state.faults += 1
        logger.warning(f"[TRAINER] Non-finite gradient at step {state.step + 1}; update skipped (faults={state.faults})")
        return False

    state.step += 1
    t = state.step
    b1, b2 = cfg.beta1, cfg.beta2
    correction1 = 1.0 - b1 ** t
    correction2 = 1.0 - b2 ** t
    for name, p in params.items():
        g = grads.get(name)
        g = np.zeros(p.shape) if g is None else np.asarray(g, dtype=np.float64)
        m = state.m.get(name)
        v = state.v.get(name)
        m = (1.0 - b1) * g if m is None else b1 * m + (1.0 - b1) * g
        v = (1.0 - b2) * g * g if v is None else b2 * v + (1.0 - b2) * g * g
        state.m[name], state.v[name] = m, v

        update = (m / correction1) / (np.sqrt(v / correction2) + cfg.eps)
        if cfg.weight_decay and not is_decay_exempt(name):
            update = update + cfg.weight_decay * p.data
        p.data = (p.data - cfg.learning_rate * update).astype(p.dtype)
    return True


def collect_grads(params: Mapping[str, Tensor]) -> Dict[str, np.ndarray]:
    return {name: (p.grad if p.grad is not None else np.zeros(p.shape, dtype=p.dtype)) for name, p in params.items()}
