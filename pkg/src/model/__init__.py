from .trajectory_model import DECODE_MODES, GaussianTrajectory, TrajectoryModel
from .losses import LossBreakdown, combined_loss, loss_terms, nll
from .checkpoint import check_compatible, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
