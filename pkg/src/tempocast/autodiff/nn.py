"""Parameter containers and the two basic layers every model builds on."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from tempocast.autodiff.tensor import Tensor, layer_norm, matmul
from tempocast.errors import ContractError


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


class Module:
    """Tree of named parameters and sub-modules.

    Attribute assignment registers :class:`Tensor` objects flagged with
    ``requires_grad`` as parameters and :class:`Module` / list-of-Module
    values as children, in assignment order.
    """

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_children", {})
        object.__setattr__(self, "training", True)

    def __setattr__(self, name, value):
        if isinstance(value, Tensor) and value.requires_grad:
            self._params[name] = value
        elif isinstance(value, Module):
            self._children[name] = value
        elif isinstance(value, list) and value and all(isinstance(v, Module) for v in value):
            self._children[name] = ModuleList(value)
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, p in self._params.items():
            yield prefix + name, p
        for name, child in self._children.items():
            yield from child.named_parameters(prefix + name + ".")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def parameter_set(self) -> "ParameterSet":
        return ParameterSet(self.named_parameters())

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def modules(self) -> Iterator["Module"]:
        yield self
        for child in self._children.values():
            yield from child.modules()

    def train(self, mode: bool = True) -> "Module":
        for m in self.modules():
            object.__setattr__(m, "training", mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()


class ModuleList(Module):
    def __init__(self, items):
        super().__init__()
        object.__setattr__(self, "items", list(items))
        for i, m in enumerate(self.items):
            self._children[str(i)] = m

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]


class ParameterSet:
    """Ordered, uniquely named collection of trainable tensors."""

    def __init__(self, items):
        self._items: dict[str, Tensor] = {}
        for name, t in items:
            if name in self._items:
                raise ContractError(f"duplicate parameter name {name!r}")
            self._items[name] = t

    def __iter__(self):
        return iter(self._items.items())

    def __len__(self):
        return len(self._items)

    def __getitem__(self, name: str) -> Tensor:
        return self._items[name]

    def names(self) -> list[str]:
        return list(self._items)

    def tensors(self) -> list[Tensor]:
        return list(self._items.values())


def param(data: np.ndarray) -> Tensor:
    return Tensor(data, requires_grad=True)


class Linear(Module):
    """Dense map ``x @ W + b`` over the last axis."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, bias: bool = True):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.weight = param(glorot_uniform(rng, in_features, out_features))
        self.bias = param(np.zeros(out_features)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = matmul(x, self.weight)
        return y + self.bias if self.bias is not None else y


class LayerNorm(Module):
    def __init__(self, size: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.gain = param(np.ones(size))
        self.bias = param(np.zeros(size))

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gain, self.bias, self.eps)
