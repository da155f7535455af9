from .optimizer import AdamState, adamw_step, clip_global_norm, collect_grads, global_norm
from .trainer import BatchProducer, TrainResult, heldout_metrics, split_heldout, train, train_step
from .ablation import ABLATION_COLUMNS, read_grid, run_ablation
