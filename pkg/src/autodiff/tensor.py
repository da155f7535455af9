# src/autodiff/tensor.py
import threading
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import BackwardError, ConfigurationError, ShapeError

_DTYPES = {"double": np.float64, "single": np.float32}
_default_dtype = np.float64

# Tapes are confined to the thread that opened them
_local = threading.local()


def set_default_precision(precision: str) -> None:
    """Selects the dtype used for tensors built from non-float input."""
    global _default_dtype
    if precision not in _DTYPES:
        raise ConfigurationError(f"Unknown precision '{precision}'", allowed=sorted(_DTYPES))
    _default_dtype = _DTYPES[precision]


def default_dtype():
    return _default_dtype


def dtype_for(precision: str):
    return _DTYPES[precision]


def _tape_stack() -> List["Tape"]:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


def active_tape() -> Optional["Tape"]:
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """
    n-dimensional array plus the bookkeeping reverse mode needs.
    `grad` is only populated on leaves (tensors not produced by a taped op).
    """
    __slots__ = ("data", "requires_grad", "grad", "name", "_tape")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None, dtype=None):
        if dtype is None:
            if isinstance(data, np.ndarray) and data.dtype in (np.float32, np.float64):
                dtype = data.dtype
            else:
                dtype = _default_dtype
        self.data = np.asarray(data, dtype=dtype)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._tape: Optional["Tape"] = None

    # --- array protocol -------------------------------------------------
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._tape is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError("item", self.shape, detail="item() needs a single-element tensor")
        return float(self.data.reshape(-1)[0])

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    # --- operator sugar ---------------------------------------------------
    def __add__(self, other):
        return ops.add(self, other)

    def __radd__(self, other):
        return ops.add(self, other)

    def __sub__(self, other):
        return ops.sub(self, other)

    def __rsub__(self, other):
        return ops.add(ops.scalar_scale(self, -1.0), other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return ops.scalar_scale(self, float(other))
        return ops.mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return ops.scalar_scale(self, -1.0)

    def __matmul__(self, other):
        return ops.matmul(self, other)

    def __getitem__(self, key):
        return ops.slice_tensor(self, key)


@dataclass
class TapeEntry:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tape:
    """
    Ordered record of executed primitives. Entries are appended in execution
    order, so the list is already topologically sorted.

    Usage:
        with Tape() as tape:
            loss = f(x)
            tape.backward(loss)
        tape.reset()
    """

    def __init__(self):
        self.entries: List[TapeEntry] = []
        self._consumed = False

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()
        return False

    def __len__(self) -> int:
        return len(self.entries)

    def record(self, op: str, inputs: Tuple[Tensor, ...], output: Tensor, backward_fn) -> None:
        if self._consumed:
            raise BackwardError("Tape already consumed by backward(); call reset() before recording", op=op)
        output._tape = self
        self.entries.append(TapeEntry(op, inputs, output, backward_fn))

    def backward(self, loss: Tensor) -> None:
        if loss.size != 1:
            raise BackwardError("backward() requires a scalar loss", shape=loss.shape)
        if loss._tape is not self:
            raise BackwardError("Loss was not produced through ops recorded on this tape")
        if self._consumed:
            raise BackwardError("backward() called twice on the same tape without reset()")
        self._consumed = True

        pending = {id(loss): np.ones_like(loss.data)}
        for entry in reversed(self.entries):
            grad_out = pending.pop(id(entry.output), None)
            if grad_out is None:
                continue
            for inp, grad_in in zip(entry.inputs, entry.backward(grad_out)):
                if grad_in is None or not inp.requires_grad:
                    continue
                if inp._tape is self:
                    key = id(inp)
                    pending[key] = grad_in if key not in pending else pending[key] + grad_in
                else:
                    grad_in = np.asarray(grad_in, dtype=inp.data.dtype).reshape(inp.shape)
                    inp.grad = grad_in.copy() if inp.grad is None else inp.grad + grad_in

    def reset(self) -> None:
        self.entries.clear()
        self._consumed = False


def backward(loss: Tensor) -> None:
    """Populates `.grad` on every leaf that requires grad."""
    if loss._tape is None:
        raise BackwardError("Loss was not produced through taped ops")
    loss._tape.backward(loss)


from . import ops  # noqa: E402  (operator sugar above resolves at call time)
