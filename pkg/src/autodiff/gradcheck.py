# src/autodiff/gradcheck.py
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..logger import logger
from .tensor import Tape, Tensor


@dataclass
class GradFailure:
    index: Tuple[int, ...]
    analytic: float
    numeric: float
    rel_error: float


@dataclass
class GradCheckReport:
    max_rel_error: float
    passed: bool
    tolerance: float
    checked: int
    failures: List[GradFailure] = field(default_factory=list)


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def _scalar(value: Tensor) -> float:
    return float(np.asarray(value.data, dtype=np.float64).reshape(-1)[0])


def grad_check(
    f: Callable[[Tensor], Tensor],
    x,
    h: float = 1e-5,
    tol: float = 1e-4,
    max_coords: Optional[int] = None,
    seed: int = 0,
    atol: float = 0.0,
) -> GradCheckReport:
    """
    Compares the taped gradient of scalar f at x with central differences,
    element-wise, always in double precision.

    `max_coords` checks a seeded random subset of coordinates. A coordinate
    fails when its relative error exceeds `tol` and its absolute error
    exceeds `atol` (0 keeps the plain relative criterion).
    """
    base = np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64)

    with Tape() as tape:
        leaf = Tensor(base.copy(), requires_grad=True)
        out = f(leaf)
        tape.backward(out)
    analytic = leaf.grad if leaf.grad is not None else np.zeros_like(base)

    coords = list(np.ndindex(*base.shape)) if base.shape else [()]
    if max_coords is not None and len(coords) > max_coords:
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(coords), size=max_coords, replace=False)
        coords = [coords[i] for i in sorted(picks)]

    failures: List[GradFailure] = []
    max_rel = 0.0
    for idx in coords:
        plus = base.copy()
        plus[idx] += h
        minus = base.copy()
        minus[idx] -= h
        numeric = (_scalar(f(Tensor(plus))) - _scalar(f(Tensor(minus)))) / (2.0 * h)
        a = float(analytic[idx])
        rel = relative_error(a, numeric)
        max_rel = max(max_rel, rel)
        if rel > tol and abs(a - numeric) > atol:
            failures.append(GradFailure(tuple(int(i) for i in idx), a, numeric, rel))

    report = GradCheckReport(
        max_rel_error=max_rel,
        passed=not failures,
        tolerance=tol,
        checked=len(coords),
        failures=failures,
    )
    if failures:
        logger.debug(f"[AUTODIFF] grad_check failed on {len(failures)}/{len(coords)} coords (max rel {max_rel:.3e})")
    return report
