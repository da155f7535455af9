from .manifest import RunManifest
from .model_config import BACKBONE_PRESETS, LossWeights, ModelConfig, feature_map_size, resolve_backbone
from .shift_config import IN_DOMAIN, SHIFTED, SHIFT_PRESETS, RasterConfig, ShiftConfig
from .train_config import TrainConfig
