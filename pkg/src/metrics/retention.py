# src/metrics/retention.py
"""
Error-retention curves. Scenes are retained most-confident first; scenes not
retained are handed to an oracle and contribute zero error.
"""
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..errors import ConfigurationError, NumericFaultError, ShapeError


@dataclass(frozen=True)
class RetentionCurve:
    fractions: np.ndarray   # k / N for k = 0..N
    errors: np.ndarray      # f(k)
    r_auc: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"fraction": self.fractions, "retained_error": self.errors})


def retention_curve(errors, uncertainties) -> RetentionCurve:
    errors = np.asarray(errors, dtype=np.float64).reshape(-1)
    uncertainties = np.asarray(uncertainties, dtype=np.float64).reshape(-1)
    if errors.shape != uncertainties.shape:
        raise ShapeError("retention_curve", errors.shape, uncertainties.shape)
    n = errors.size
    if n < 1:
        raise ConfigurationError("retention_curve needs at least one scene")
    if not (np.all(np.isfinite(errors)) and np.all(np.isfinite(uncertainties))):
        raise NumericFaultError("retention_curve: non-finite errors or uncertainties")

    order = np.argsort(uncertainties, kind="stable")
    retained = np.concatenate([[0.0], np.cumsum(errors[order])]) / n
    fractions = np.arange(n + 1, dtype=np.float64) / n
    r_auc = float(retained[1:].sum() / n)
    return RetentionCurve(fractions=fractions, errors=retained, r_auc=r_auc)


def oracle_r_auc(errors) -> float:
    """r_auc when uncertainty ranks scenes exactly by their error."""
    errors = np.asarray(errors, dtype=np.float64)
    return retention_curve(errors, errors).r_auc
