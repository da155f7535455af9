from .displacement import (
    CandidateSet,
    MinAggregate,
    WeightedAggregate,
    ade,
    fde,
    gaussian_nll,
    min_agg,
    weighted_agg,
)
from .retention import RetentionCurve, oracle_r_auc, retention_curve
