from .rip import (
    AGGREGATORS,
    EnsemblePrediction,
    aggregate_scores,
    predict_scenes,
    rip_predict,
    score_candidates,
    score_under_model,
)
from .prediction_io import PredictionRecord, decode_record, read_predictions, write_predictions
