"""Dense float64 tensors with a dynamic reverse-mode tape.

Every differentiable primitive returns a new :class:`Tensor` that remembers
its parents and a closure mapping the output gradient to parent gradients.
Each tensor carries a monotonically increasing creation id, so sorting the
reachable nodes by id replays the executed operations in exact reverse order
during :meth:`Tensor.backward`.

Broadcasting is restricted to trailing dimensions: the shape of the smaller
operand must be a suffix of the larger one (scalars always qualify).
"""

from __future__ import annotations

import contextlib
import itertools
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from tempocast.errors import ConfigError, ContractError, DimensionError

_ids = itertools.count()
_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _as_array(value) -> np.ndarray:
    return np.asarray(value, dtype=np.float64)


class Tensor:
    """An n-dimensional float64 array that can take part in backprop."""

    __slots__ = ("data", "requires_grad", "grad", "name", "op", "_parents", "_backward", "_id")
    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = _as_array(data)
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self.name = name
        self.op = "leaf"
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None
        self._id = next(_ids)

    # ------------------------------------------------------------------ basics
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def __repr__(self) -> str:
        tag = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, op={self.op}{tag})"

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    # ---------------------------------------------------------------- backward
    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``grad``.

        Leaf gradients accumulate across calls. Interior gradients are
        transient and released once propagated.
        """
        if self.data.size != 1:
            raise ContractError(f"backward() needs a scalar loss, got shape {self.shape}")
        if not self.requires_grad:
            raise ContractError("loss does not depend on any tensor with requires_grad")
        nodes = _reachable(self)
        for node in nodes:
            if not node.is_leaf:
                node.grad = None
        # arrays in `owned` were allocated here and may be updated in place
        owned: set[int] = set()
        self.grad = np.ones_like(self.data) if self.grad is None else self.grad + 1.0
        for node in sorted(nodes, key=lambda t: t._id, reverse=True):
            if node.is_leaf or node.grad is None:
                continue
            grads = node._backward(node.grad)
            for parent, g in zip(node._parents, grads):
                if g is None or not parent.requires_grad:
                    continue
                if isinstance(g, _IndexGrad):
                    if parent.grad is None:
                        parent.grad = np.zeros_like(parent.data)
                        owned.add(parent._id)
                    elif parent._id not in owned:
                        parent.grad = parent.grad.copy()
                        owned.add(parent._id)
                    if _has_advanced(g.index):
                        np.add.at(parent.grad, g.index, g.value)
                    else:
                        parent.grad[g.index] += g.value
                elif parent.grad is None:
                    parent.grad = g
                else:
                    parent.grad = parent.grad + g
                    owned.add(parent._id)
            if node is not self:
                node.grad = None

    # ------------------------------------------------------------- operators
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __pow__(self, exponent: float):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    def sigmoid(self):
        return sigmoid(self)

    def tanh(self):
        return tanh(self)

    def relu(self):
        return relu(self)

    def elu(self):
        return elu(self)

    def exp(self):
        return exp(self)


class _IndexGrad(NamedTuple):
    """Gradient that only touches ``parent[index]``; added in place."""

    index: object
    value: np.ndarray


def _reachable(root: Tensor) -> list[Tensor]:
    seen: set[int] = set()
    out: list[Tensor] = []
    stack = [root]
    while stack:
        node = stack.pop()
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        out.append(node)
        stack.extend(node._parents)
    return out


def tensor(data, requires_grad: bool = False, name: str | None = None) -> Tensor:
    return Tensor(data, requires_grad=requires_grad, name=name)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward, op: str) -> Tensor:
    out = Tensor(data)
    out.op = op
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.grad = None
        out._parents = parents
        out._backward = backward
    return out


# ------------------------------------------------------------- broadcasting
def _check_broadcast(a: tuple[int, ...], b: tuple[int, ...], op: str) -> None:
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    if long_[len(long_) - len(short):] != short:
        raise DimensionError(f"{op}: shapes {a} and {b} are not trailing-broadcast compatible")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    return grad.reshape(shape)


# ------------------------------------------------------------ binary ops
def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_broadcast(a.shape, b.shape, "add")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(a.data + b.data, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_broadcast(a.shape, b.shape, "sub")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make(a.data - b.data, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_broadcast(a.shape, b.shape, "mul")

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _make(a.data * b.data, (a, b), backward, "mul")


def div(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_broadcast(a.shape, b.shape, "div")

    def backward(g):
        ga = g / b.data
        gb = -g * a.data / (b.data * b.data)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make(a.data / b.data, (a, b), backward, "div")


def power(a: Tensor, exponent: float) -> Tensor:
    a = _wrap(a)

    def backward(g):
        return (g * exponent * a.data ** (exponent - 1),)

    return _make(a.data**exponent, (a,), backward, "pow")


def matmul(a, b) -> Tensor:
    """Matrix product over the last two axes.

    ``a`` may carry leading batch axes. ``b`` is either a plain matrix shared
    across the batch or carries exactly the same batch axes as ``a``.
    """
    a, b = _wrap(a), _wrap(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs rank >= 2 operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    if b.ndim > 2 and a.shape[:-2] != b.shape[:-2]:
        raise DimensionError(f"matmul batch dimensions differ: {a.shape} @ {b.shape}")

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        if b.ndim == 2:
            gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            gb = np.swapaxes(a.data, -1, -2) @ g
        return ga, gb

    return _make(a.data @ b.data, (a, b), backward, "matmul")


# ------------------------------------------------------------- unary ops
def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def sigmoid(x: Tensor) -> Tensor:
    s = _stable_sigmoid(x.data)

    def backward(g):
        return (g * s * (1.0 - s),)

    return _make(s, (x,), backward, "sigmoid")


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.data)

    def backward(g):
        return (g * (1.0 - t * t),)

    return _make(t, (x,), backward, "tanh")


def relu(x: Tensor) -> Tensor:
    pos = x.data > 0

    def backward(g):
        return (g * pos,)

    return _make(np.where(pos, x.data, 0.0), (x,), backward, "relu")


def elu(x: Tensor, alpha: float = 1.0) -> Tensor:
    pos = x.data > 0
    neg_part = alpha * np.expm1(np.minimum(x.data, 0.0))

    def backward(g):
        return (g * np.where(pos, 1.0, neg_part + alpha),)

    return _make(np.where(pos, x.data, neg_part), (x,), backward, "elu")


def exp(x: Tensor) -> Tensor:
    e = np.exp(x.data)

    def backward(g):
        return (g * e,)

    return _make(e, (x,), backward, "exp")


def log(x: Tensor) -> Tensor:
    def backward(g):
        return (g / x.data,)

    return _make(np.log(x.data), (x,), backward, "log")


ELEMENTWISE = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "elu": elu,
    "relu": relu,
}


def elementwise(op: str, *inputs) -> Tensor:
    """Dispatch a named elementwise primitive."""
    try:
        fn = ELEMENTWISE[op]
    except KeyError:
        raise ConfigError(f"unknown elementwise op {op!r}; choose from {sorted(ELEMENTWISE)}") from None
    return fn(*inputs)


# ---------------------------------------------------------- reductions
def _norm_axis(axis, ndim: int):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    out = []
    for ax in axis:
        if not -ndim <= ax < ndim:
            raise DimensionError(f"axis {ax} out of range for rank {ndim}")
        out.append(ax % ndim)
    return tuple(out)


def tsum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _norm_axis(axis, x.ndim)
    out = x.data.sum(axis=axes, keepdims=keepdims)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _make(out, (x,), backward, "sum")


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _norm_axis(axis, x.ndim)
    count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    return tsum(x, axis=axes, keepdims=keepdims) * (1.0 / count)


# -------------------------------------------------------- shape handling
def reshape(x: Tensor, shape) -> Tensor:
    shape = tuple(shape)

    def backward(g):
        return (g.reshape(x.shape),)

    return _make(x.data.reshape(shape), (x,), backward, "reshape")


def transpose(x: Tensor, axes=None) -> Tensor:
    axes = tuple(range(x.ndim))[::-1] if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (np.transpose(g, inverse),)

    return _make(np.transpose(x.data, axes), (x,), backward, "transpose")


def swapaxes(x: Tensor, a: int, b: int) -> Tensor:
    axes = list(range(x.ndim))
    axes[a], axes[b] = axes[b], axes[a]
    return transpose(x, axes)


def getitem(x: Tensor, index) -> Tensor:
    out = x.data[index]

    def backward(g):
        return (_IndexGrad(index, g),)

    return _make(np.array(out, copy=True), (x,), backward, "getitem")


def _has_advanced(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return any(isinstance(i, (list, np.ndarray)) for i in items)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    if not tensors:
        raise ContractError("concat needs at least one tensor")
    ndim = tensors[0].ndim
    axis = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or any(t.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != axis):
            raise DimensionError(f"concat: shapes {tensors[0].shape} and {t.shape} differ off axis {axis}")
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        sl = [slice(None)] * ndim
        out = []
        for i in range(len(tensors)):
            sl[axis] = slice(bounds[i], bounds[i + 1])
            out.append(g[tuple(sl)])
        return tuple(out)

    data = np.concatenate([t.data for t in tensors], axis=axis)
    return _make(data, tuple(tensors), backward, "concat")


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    if not tensors:
        raise ContractError("stack needs at least one tensor")
    shape = tensors[0].shape
    for t in tensors[1:]:
        if t.shape != shape:
            raise DimensionError(f"stack: shapes {shape} and {t.shape} differ")
    axis = axis % (len(shape) + 1)

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    data = np.stack([t.data for t in tensors], axis=axis)
    return _make(data, tuple(tensors), backward, "stack")


def pad_left(x: Tensor, amount: int, axis: int) -> Tensor:
    """Prepend ``amount`` zeros along ``axis``."""
    axis = axis % x.ndim
    if amount == 0:
        return x
    widths = [(0, 0)] * x.ndim
    widths[axis] = (amount, 0)

    def backward(g):
        sl = [slice(None)] * x.ndim
        sl[axis] = slice(amount, None)
        return (g[tuple(sl)],)

    return _make(np.pad(x.data, widths), (x,), backward, "pad")


def masked_fill(x: Tensor, mask: np.ndarray, value: float) -> Tensor:
    """Replace entries where ``mask`` is true by the constant ``value``.

    ``mask`` is a boolean array whose shape is a suffix of ``x.shape``.
    """
    mask = np.asarray(mask, dtype=bool)
    _check_broadcast(x.shape, mask.shape, "masked_fill")
    keep = ~mask

    def backward(g):
        return (g * keep,)

    return _make(np.where(mask, value, x.data), (x,), backward, "masked_fill")


# ------------------------------------------------------ composite kernels
def softmax(x: Tensor, axis: int = -1) -> Tensor:
    _norm_axis(axis, x.ndim)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=axis, keepdims=True)),)

    return _make(s, (x,), backward, "softmax")


def layer_norm(x: Tensor, gain: Tensor | None = None, bias: Tensor | None = None, eps: float = 1e-5) -> Tensor:
    """Normalise over the last axis, then apply ``gain * x_hat + bias``."""
    d = x.shape[-1]
    gain = _wrap(np.ones(d)) if gain is None else gain
    bias = _wrap(np.zeros(d)) if bias is None else bias
    if gain.shape != (d,) or bias.shape != (d,):
        raise DimensionError(f"layer_norm: gain {gain.shape} / bias {bias.shape} must be ({d},)")
    mu = x.data.mean(axis=-1, keepdims=True)
    centred = x.data - mu
    var = (centred * centred).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centred * inv_std
    lead = tuple(range(x.ndim - 1))

    def backward(g):
        dxhat = g * gain.data
        dx = inv_std * (
            dxhat - dxhat.mean(axis=-1, keepdims=True) - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        return dx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return _make(xhat * gain.data + bias.data, (x, gain, bias), backward, "layer_norm")


def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout; identity when not training or ``rate == 0``."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ContractError("dropout in training mode needs an rng")
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)

    def backward(g):
        return (g * keep,)

    return _make(x.data * keep, (x,), backward, "dropout")


def ones_like_batch(batch: int, row: Tensor) -> Tensor:
    """Tile a 1-D tensor into ``(batch, len)`` while keeping it differentiable."""
    return matmul(Tensor(np.ones((batch, 1))), reshape(row, (1, row.shape[-1])))


def parameters_of(tensors: Iterable[Tensor]) -> list[Tensor]:
    return [t for t in tensors if t.requires_grad]


def lstm_sequence(x_proj: Tensor, h0: Tensor, c0: Tensor, w_h: Tensor) -> Tensor:
    """Fused LSTM recurrence over time with hand-written BPTT.

    ``x_proj`` is (B, T, 4H) holding ``x_t @ W_x + b`` with gate columns
    ordered input, forget, output, candidate; ``h0``/``c0`` are (B, H) and
    ``w_h`` is (H, 4H). Returns (B, T, 2H): hidden state in the first H
    channels and cell state in the last H of every step.
    """
    b, steps, four_h = x_proj.shape
    n = four_h // 4
    if four_h != 4 * n or w_h.shape != (n, four_h) or h0.shape != (b, n) or c0.shape != (b, n):
        raise DimensionError(
            f"lstm_sequence: x_proj {x_proj.shape}, h0 {h0.shape}, c0 {c0.shape}, w_h {w_h.shape} disagree"
        )
    W = w_h.data
    gates = np.empty((steps, b, four_h))
    cells = np.empty((steps + 1, b, n))
    hiddens = np.empty((steps + 1, b, n))
    tanh_c = np.empty((steps, b, n))
    hiddens[0], cells[0] = h0.data, c0.data
    for t in range(steps):
        z = x_proj.data[:, t] + hiddens[t] @ W
        g = gates[t]
        g[:, : 3 * n] = _stable_sigmoid(z[:, : 3 * n])
        g[:, 3 * n :] = np.tanh(z[:, 3 * n :])
        cells[t + 1] = g[:, n : 2 * n] * cells[t] + g[:, :n] * g[:, 3 * n :]
        tanh_c[t] = np.tanh(cells[t + 1])
        hiddens[t + 1] = g[:, 2 * n : 3 * n] * tanh_c[t]
    out = np.concatenate([hiddens[1:], cells[1:]], axis=-1).transpose(1, 0, 2).copy()

    def backward(grad):
        grad = grad.transpose(1, 0, 2)
        d_proj = np.empty((steps, b, four_h))
        d_w = np.zeros_like(W)
        dh = np.zeros((b, n))
        dc = np.zeros((b, n))
        for t in range(steps - 1, -1, -1):
            g = gates[t]
            i, f, o, cand = g[:, :n], g[:, n : 2 * n], g[:, 2 * n : 3 * n], g[:, 3 * n :]
            dh = dh + grad[t, :, :n]
            dc = dc + grad[t, :, n:] + dh * o * (1.0 - tanh_c[t] ** 2)
            dz = d_proj[t]
            dz[:, :n] = dc * cand * i * (1.0 - i)
            dz[:, n : 2 * n] = dc * cells[t] * f * (1.0 - f)
            dz[:, 2 * n : 3 * n] = dh * tanh_c[t] * o * (1.0 - o)
            dz[:, 3 * n :] = dc * i * (1.0 - cand * cand)
            d_w += hiddens[t].T @ dz
            dh = dz @ W.T
            dc = dc * f
        return d_proj.transpose(1, 0, 2), dh, dc, d_w

    return _make(out, (x_proj, h0, c0, w_h), backward, "lstm_sequence")
