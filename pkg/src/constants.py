# src/constants.py
import math

# Time axis: 5 Hz, 25 past frames + 25 future frames (5 s each)
FRAME_RATE_HZ = 5
DT = 1.0 / FRAME_RATE_HZ
PAST_STEPS = 25
FUTURE_STEPS = 25

LOG_2PI = math.log(2.0 * math.pi)

# Split tags as stored in dataset records
SPLIT_TAGS = {"in_domain": 0, "shifted": 1}
SPLIT_NAMES = {code: name for name, code in SPLIT_TAGS.items()}

# Binary containers
DATASET_MAGIC = b"TRJK"
DATASET_VERSION = 1
CHECKPOINT_MAGIC = b"TJKW"
CHECKPOINT_VERSION = 1

# Ids written into the checkpoint config block
BACKBONE_IDS = {"nf18": 0, "nf50": 1, "dws-baseline": 2}
HEAD_IDS = {"bc": 0, "dim": 1}

# log-scale clamp applied before exp() in the likelihood heads
LOG_SCALE_MIN = -5.0
LOG_SCALE_MAX = 5.0

# Standardized-weight epsilon (guards zero-variance kernel slices)
WS_EPS = 1e-6

# Vehicle footprint used by the rasterizer (meters)
VEHICLE_LENGTH = 4.5
VEHICLE_WIDTH = 2.0

# CLI exit codes
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
