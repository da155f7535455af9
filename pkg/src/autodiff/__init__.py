from src.autodiff.tensor import Tape, Tensor, active_tape, backward, default_dtype, dtype_for, set_default_precision
from src.autodiff.gradcheck import GradCheckReport, grad_check
from src.autodiff import ops

__all__ = [
    "Tape", "Tensor", "active_tape", "backward", "default_dtype", "dtype_for",
    "set_default_precision", "GradCheckReport", "grad_check", "ops",
]
