"""Temporal Fusion Transformer for a single series with calendar covariates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tempocast.autodiff import tensor as ops
from tempocast.autodiff.nn import Linear, Module, param
from tempocast.autodiff.tensor import Tensor
from tempocast.data import WindowBatch
from tempocast.errors import ConfigError
from tempocast.losses import mse_loss, quantile_loss
from tempocast.models.base import ForecastModel, require_windows
from tempocast.models.config import TftConfig
from tempocast.models.layers import (
    Dropout,
    GateAddNorm,
    GatedResidualNetwork,
    InterpretableMultiHeadAttention,
    LSTMLayer,
    ScalarEmbedding,
    VariableSelectionNetwork,
    causal_mask,
)


@dataclass
class AttentionTrace:
    """Raw interpretability weights from one forward pass.

    ``attention`` is (B, heads, L, L) over the full k + n sequence,
    ``past_selection`` is (B, k, 1 + c), ``future_selection`` is (B, n, c).
    """

    attention: np.ndarray
    past_selection: np.ndarray
    future_selection: np.ndarray

    def check(self) -> None:
        length = self.attention.shape[-1]
        upper = self.attention[..., causal_mask(length)]
        if upper.size and np.any(upper != 0.0):
            raise AssertionError("attention mask violated: nonzero weight on a future position")


class StaticCovariateEncoder(Module):
    """Four GRNs turning the static embedding into context vectors."""

    names = ("selection", "cell", "hidden", "enrichment")

    def __init__(self, d: int, dropout: float, rng, drop_rng):
        super().__init__()
        self.grns = [GatedResidualNetwork(d, d, rng, drop_rng, dropout=dropout) for _ in self.names]

    def __call__(self, static: Tensor) -> list[Tensor]:
        row = static.reshape(1, static.shape[-1])
        return [g(row).reshape(static.shape[-1]) for g in self.grns]


def static_encoder_forward(encoder: StaticCovariateEncoder, static: Tensor) -> list[Tensor]:
    return encoder(static)


class TemporalFusionTransformer(ForecastModel):
    kind = "tft"
    default_loss = "quantile"
    losses = ("quantile", "mse")

    def __init__(self, config: TftConfig = TftConfig(), seed: int = 0):
        if config.n_covariates < 1:
            raise ConfigError("the TFT needs at least one future covariate")
        super().__init__(config, seed)
        rng, drop = self.init_rng, self.drop_rng
        d, c, p = config.hidden_size, config.n_covariates, config.dropout
        self.static_embedding = param(rng.normal(0.0, 1.0, size=d))
        self.static_encoder = StaticCovariateEncoder(d, p, rng, drop)
        self.past_embedding = ScalarEmbedding(1 + c, d, rng)
        self.future_embedding = ScalarEmbedding(c, d, rng)
        self.past_selection = VariableSelectionNetwork(1 + c, d, rng, drop, context_size=d, dropout=p)
        self.future_selection = VariableSelectionNetwork(c, d, rng, drop, context_size=d, dropout=p)
        self.encoder = [LSTMLayer(d, d, rng) for _ in range(config.lstm_layers)]
        self.decoder = [LSTMLayer(d, d, rng) for _ in range(config.lstm_layers)]
        self.lstm_drop = Dropout(p, drop)
        self.post_lstm = GateAddNorm(d, d, p, rng, drop)
        self.enrichment = GatedResidualNetwork(d, d, rng, drop, context_size=d, dropout=p)
        self.attention = InterpretableMultiHeadAttention(d, config.attention_heads, rng)
        self.post_attention = GateAddNorm(d, d, p, rng, drop)
        self.positionwise = GatedResidualNetwork(d, d, rng, drop, dropout=p)
        self.head = Linear(d, len(config.quantiles), rng)

    @property
    def quantiles(self) -> tuple[float, ...]:
        return tuple(self.config.quantiles)

    def _run_lstm(self, layers, x: Tensor, states):
        finals = []
        for i, layer in enumerate(layers):
            if i:
                x = self.lstm_drop(x)
            x, h, c = layer(x, *states[i])
            finals.append((h, c))
        return x, finals

    def forward(self, past, future) -> tuple[Tensor, AttentionTrace]:
        """Return (B, n, |Q|) quantile forecasts and the attention trace."""
        past = past if isinstance(past, Tensor) else Tensor(past)
        future = future if isinstance(future, Tensor) else Tensor(future)
        b, k = past.shape[:2]
        n = future.shape[1]
        ctx_sel, ctx_cell, ctx_hidden, ctx_enrich = self.static_encoder(self.static_embedding)

        past_x, past_w = self.past_selection(self.past_embedding(past), ctx_sel)
        fut_x, fut_w = self.future_selection(self.future_embedding(future), ctx_sel)

        h0 = ops.ones_like_batch(b, ctx_hidden)
        c0 = ops.ones_like_batch(b, ctx_cell)
        enc, finals = self._run_lstm(self.encoder, past_x, [(h0, c0)] * len(self.encoder))
        dec, _ = self._run_lstm(self.decoder, fut_x, finals)

        lstm_out = ops.concat([enc, dec], axis=1)
        selected = ops.concat([past_x, fut_x], axis=1)
        temporal = self.post_lstm(lstm_out, selected)
        enriched = self.enrichment(temporal, ctx_enrich)
        attended, attn_w = self.attention(enriched, enriched, enriched, mask=causal_mask(k + n))
        x = self.post_attention(attended, enriched)
        x = self.positionwise(x)
        out = self.head(x[:, k:, :])

        trace = AttentionTrace(attn_w.data.copy(), past_w.data.copy(), fut_w.data.copy())
        trace.check()
        return out, trace

    def training_loss(self, batch: WindowBatch, kind: str | None = None) -> Tensor:
        kind = self.resolve_loss(kind)
        require_windows(batch, self)
        out, _ = self.forward(batch.past_inputs, batch.future_covariates)
        if kind == "mse":
            return mse_loss(out[..., self.config.median_index], batch.targets)
        return quantile_loss(out, batch.targets, self.quantiles)

    def predict_arrays(self, past, future) -> dict:
        out, trace = self.forward(past, future)
        q = out.data
        return {
            "point": q[..., self.config.median_index].copy(),
            "quantiles": {level: q[..., i].copy() for i, level in enumerate(self.quantiles)},
            "trace": trace,
        }


def tft_forward(model: TemporalFusionTransformer, past, future):
    return model.forward(past, future)
