"""Building blocks shared by the neural forecasters."""

from __future__ import annotations

import math

import numpy as np

from tempocast.autodiff import tensor as ops
from tempocast.autodiff.nn import LayerNorm, Linear, Module, glorot_uniform, param
from tempocast.autodiff.tensor import Tensor
from tempocast.errors import ConfigError, DimensionError

MASK_VALUE = -1e9


class Dropout(Module):
    def __init__(self, rate: float, rng: np.random.Generator):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng

    def __call__(self, x: Tensor) -> Tensor:
        return ops.dropout(x, self.rate, self.training, self.rng)


class GatedLinearUnit(Module):
    """``sigmoid(gate(x)) * value(x)``."""

    def __init__(self, in_size: int, out_size: int, rng: np.random.Generator):
        super().__init__()
        self.gate = Linear(in_size, out_size, rng)
        self.value = Linear(in_size, out_size, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return ops.sigmoid(self.gate(x)) * self.value(x)


class GateAddNorm(Module):
    """Dropout, GLU, residual add, layer norm."""

    def __init__(self, in_size: int, out_size: int, dropout: float, rng, drop_rng):
        super().__init__()
        self.drop = Dropout(dropout, drop_rng)
        self.glu = GatedLinearUnit(in_size, out_size, rng)
        self.norm = LayerNorm(out_size)

    def __call__(self, x: Tensor, residual: Tensor) -> Tensor:
        return self.norm(self.glu(self.drop(x)) + residual)


class GatedResidualNetwork(Module):
    """``LayerNorm(skip(a) + GLU(dense2(ELU(dense1(a) + context(c)))))``.

    The skip path is the identity when input and output sizes match and a
    learned linear projection otherwise.
    """

    def __init__(
        self,
        input_size: int,
        hidden_size: int,
        rng: np.random.Generator,
        drop_rng: np.random.Generator,
        output_size: int | None = None,
        context_size: int | None = None,
        dropout: float = 0.0,
    ):
        super().__init__()
        output_size = hidden_size if output_size is None else output_size
        self.input_size = input_size
        self.output_size = output_size
        self.skip = Linear(input_size, output_size, rng) if input_size != output_size else None
        self.dense1 = Linear(input_size, hidden_size, rng)
        self.context = Linear(context_size, hidden_size, rng, bias=False) if context_size else None
        self.dense2 = Linear(hidden_size, hidden_size, rng)
        self.drop = Dropout(dropout, drop_rng)
        self.glu = GatedLinearUnit(hidden_size, output_size, rng)
        self.norm = LayerNorm(output_size)

    def __call__(self, a: Tensor, c: Tensor | None = None) -> Tensor:
        if a.shape[-1] != self.input_size:
            raise DimensionError(f"GRN expects last dim {self.input_size}, got shape {a.shape}")
        h = self.dense1(a)
        if c is not None:
            if self.context is None:
                raise ConfigError("context supplied to a GRN built without a context input")
            if c.ndim == 1:
                h = h + self.context(c.reshape(1, c.shape[0])).reshape(-1)
            else:
                h = h + self.context(c)
        h = self.dense2(ops.elu(h))
        gated = self.glu(self.drop(h))
        residual = a if self.skip is None else self.skip(a)
        return self.norm(residual + gated)


def grn_forward(grn: GatedResidualNetwork, a: Tensor, c: Tensor | None = None) -> Tensor:
    return grn(a, c)


class ScalarEmbedding(Module):
    """Embed each scalar input channel into ``d`` dimensions with its own affine map."""

    def __init__(self, n_vars: int, d: int, rng: np.random.Generator):
        super().__init__()
        self.n_vars = n_vars
        self.maps = [Linear(1, d, rng) for _ in range(n_vars)]

    def __call__(self, x: Tensor) -> list[Tensor]:
        if x.shape[-1] != self.n_vars:
            raise DimensionError(f"embedding expects {self.n_vars} channels, got shape {x.shape}")
        return [m(x[..., i : i + 1]) for i, m in enumerate(self.maps)]


class VariableSelectionNetwork(Module):
    """Softmax-weighted mixture of per-variable GRN transforms."""

    def __init__(self, n_vars: int, d: int, rng, drop_rng, context_size: int | None = None, dropout: float = 0.0):
        super().__init__()
        if n_vars < 1:
            raise ConfigError("variable selection needs at least one variable")
        self.n_vars = n_vars
        self.d = d
        self.selector = GatedResidualNetwork(
            n_vars * d, d, rng, drop_rng, output_size=n_vars, context_size=context_size, dropout=dropout
        )
        self.transforms = [GatedResidualNetwork(d, d, rng, drop_rng, dropout=dropout) for _ in range(n_vars)]

    def __call__(self, embeddings: list[Tensor], c: Tensor | None = None) -> tuple[Tensor, Tensor]:
        if not embeddings:
            raise ConfigError("variable selection needs at least one variable")
        if len(embeddings) != self.n_vars:
            raise DimensionError(f"expected {self.n_vars} variables, got {len(embeddings)}")
        flat = embeddings[0] if self.n_vars == 1 else ops.concat(embeddings, axis=-1)
        weights = ops.softmax(self.selector(flat, c), axis=-1)
        transformed = ops.stack([g(e) for g, e in zip(self.transforms, embeddings)], axis=-2)
        lead = weights.shape[:-1]
        rows = int(np.prod(lead))
        mixed = ops.matmul(
            weights.reshape(rows, 1, self.n_vars), transformed.reshape(rows, self.n_vars, self.d)
        )
        return mixed.reshape(*lead, self.d), weights


def vsn_forward(vsn: VariableSelectionNetwork, embeddings: list[Tensor], c: Tensor | None = None):
    return vsn(embeddings, c)


class LSTMLayer(Module):
    """Single LSTM layer; gate columns are ordered input, forget, output, candidate."""

    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator):
        super().__init__()
        h = hidden_size
        self.input_size = input_size
        self.hidden_size = h
        self.w_x = param(glorot_uniform(rng, input_size, 4 * h))
        self.w_h = param(glorot_uniform(rng, h, 4 * h))
        bias = np.zeros(4 * h)
        bias[h : 2 * h] = 1.0
        self.bias = param(bias)

    def project(self, x: Tensor) -> Tensor:
        return ops.matmul(x, self.w_x) + self.bias

    def step(self, x_proj: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
        n = self.hidden_size
        z = x_proj + ops.matmul(h, self.w_h)
        gates = ops.sigmoid(z[..., : 3 * n])
        cand = ops.tanh(z[..., 3 * n :])
        i, f, o = gates[..., :n], gates[..., n : 2 * n], gates[..., 2 * n :]
        c_new = f * c + i * cand
        return o * ops.tanh(c_new), c_new

    def __call__(self, xs: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor, Tensor]:
        """Run over ``xs`` (B, T, in); return the hidden sequence and final state."""
        n = self.hidden_size
        states = ops.lstm_sequence(self.project(xs), h, c, self.w_h)
        return states[..., :n], states[:, -1, :n], states[:, -1, n:]

    def unrolled(self, xs: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor, Tensor]:
        """Same as calling the layer, built step by step from elementary ops."""
        proj = self.project(xs)
        hs = []
        for t in range(xs.shape[1]):
            h, c = self.step(proj[:, t], h, c)
            hs.append(h)
        return ops.stack(hs, axis=1), h, c


def lstm_cell(layer: LSTMLayer, x: Tensor, h: Tensor, cell: Tensor) -> tuple[Tensor, Tensor]:
    return layer.step(layer.project(x), h, cell)


def causal_mask(length: int) -> np.ndarray:
    """Boolean (L, L) mask, true strictly above the diagonal."""
    return np.triu(np.ones((length, length), dtype=bool), k=1)


class InterpretableMultiHeadAttention(Module):
    """Multi-head attention whose heads share one value projection.

    Per-head weights are averaged before they meet the shared values, so a
    single attention pattern (the head mean) explains the output.
    """

    def __init__(self, d: int, heads: int, rng: np.random.Generator):
        super().__init__()
        if heads < 1 or d % heads:
            raise ConfigError(f"model dim {d} is not divisible by heads {heads}")
        self.d = d
        self.heads = heads
        self.d_head = d // heads
        self.q_proj = Linear(d, d, rng)
        self.k_proj = Linear(d, d, rng)
        self.v_proj = Linear(d, self.d_head, rng)
        self.out_proj = Linear(self.d_head, d, rng)

    def _split(self, x: Tensor) -> Tensor:
        b, length = x.shape[:2]
        return x.reshape(b, length, self.heads, self.d_head).transpose(0, 2, 1, 3)

    def __call__(self, q: Tensor, k: Tensor, v: Tensor, mask: np.ndarray | None = None):
        qh = self._split(self.q_proj(q))
        kh = self._split(self.k_proj(k))
        scores = ops.matmul(qh, ops.swapaxes(kh, -1, -2)) * (1.0 / math.sqrt(self.d_head))
        if mask is not None:
            scores = ops.masked_fill(scores, mask, MASK_VALUE)
        weights = ops.softmax(scores, axis=-1)
        mixed = ops.matmul(ops.mean(weights, axis=1), self.v_proj(v))
        return self.out_proj(mixed), weights


def mha_forward(attn: InterpretableMultiHeadAttention, q, k, v, mask=None):
    return attn(q, k, v, mask)


class CausalConv1d(Module):
    """Dilated convolution over (B, L, C) that only looks left; length preserving."""

    def __init__(self, in_ch: int, out_ch: int, kernel_size: int, dilation: int, rng: np.random.Generator):
        super().__init__()
        self.kernel_size = kernel_size
        self.dilation = dilation
        self.in_ch = in_ch
        self.linear = Linear(kernel_size * in_ch, out_ch, rng)

    def __call__(self, x: Tensor) -> Tensor:
        length = x.shape[1]
        pad = (self.kernel_size - 1) * self.dilation
        xp = ops.pad_left(x, pad, axis=1)
        taps = [xp[:, j * self.dilation : j * self.dilation + length, :] for j in range(self.kernel_size)]
        return self.linear(taps[0] if len(taps) == 1 else ops.concat(taps, axis=-1))
