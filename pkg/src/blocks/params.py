# src/blocks/params.py
from typing import Iterator, Tuple

import numpy as np

from ..autodiff import Tensor, default_dtype


class ParamGroup:
    """
    Mixin for dataclasses that hold trainable tensors. Parameters are named by
    attribute path ("stages.0.conv1"), nested groups and lists of groups included.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, value in vars(self).items():
            key = f"{prefix}{name}"
            if isinstance(value, Tensor):
                if value.requires_grad:
                    yield key, value
            elif isinstance(value, ParamGroup):
                yield from value.named_parameters(key + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, ParamGroup):
                        yield from item.named_parameters(f"{key}.{i}.")

    def parameters(self):
        return [p for _, p in self.named_parameters()]


def is_decay_exempt(name: str) -> bool:
    leaf = name.rsplit(".", 1)[-1]
    return leaf in ("bias", "gain") or leaf.endswith(("_bias", "_gain"))


def he_normal(rng: np.random.Generator, shape, fan_in: int, dtype=None) -> Tensor:
    std = np.sqrt(2.0 / max(fan_in, 1))
    data = rng.standard_normal(shape) * std
    return Tensor(data.astype(dtype or default_dtype()), requires_grad=True)


def zeros(shape, dtype=None) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype or default_dtype()), requires_grad=True)


def ones(shape, dtype=None) -> Tensor:
    return Tensor(np.ones(shape, dtype=dtype or default_dtype()), requires_grad=True)

