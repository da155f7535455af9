from .params import ParamGroup, he_normal, is_decay_exempt
from .conv_blocks import DWSBlockParams, NFBlockParams, dws_block, nf_betas, nf_block, standardize_weights
from .attention import AttentionParams, pixel_group_attention
from .recurrent import GRUParams, LinearParams, gru_cell, linear
