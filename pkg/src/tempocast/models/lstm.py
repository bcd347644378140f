"""Stacked LSTM forecaster with a dense multi-step head."""

from __future__ import annotations

import numpy as np

from tempocast.autodiff.nn import Linear
from tempocast.autodiff.tensor import Tensor
from tempocast.data import WindowBatch
from tempocast.losses import mse_loss
from tempocast.models.base import ForecastModel, require_windows
from tempocast.models.config import LstmConfig
from tempocast.models.layers import Dropout, LSTMLayer


class StackedLSTM(ForecastModel):
    kind = "lstm"

    def __init__(self, config: LstmConfig = LstmConfig(), seed: int = 0):
        super().__init__(config, seed)
        rng = self.init_rng
        h = config.hidden_size
        sizes = [1 + config.n_covariates] + [h] * (config.rnn_layers - 1)
        self.layers = [LSTMLayer(s, h, rng) for s in sizes]
        self.drop = Dropout(config.dropout, self.drop_rng)
        self.head = Linear(h, config.output_len, rng)

    def expected_parameter_count(self) -> int:
        cfg = self.config
        h, total, width = cfg.hidden_size, 0, 1 + cfg.n_covariates
        for _ in range(cfg.rnn_layers):
            total += 4 * (h * (width + h) + h)
            width = h
        return total + h * cfg.output_len + cfg.output_len

    def forward(self, past, future=None) -> Tensor:
        x = past if isinstance(past, Tensor) else Tensor(past)
        b = x.shape[0]
        h = self.config.hidden_size
        for i, layer in enumerate(self.layers):
            if i:
                x = self.drop(x)
            zeros = Tensor(np.zeros((b, h)))
            x, last, _ = layer(x, zeros, zeros)
        return self.head(last)

    def training_loss(self, batch: WindowBatch, kind: str | None = None) -> Tensor:
        self.resolve_loss(kind)
        require_windows(batch, self)
        return mse_loss(self.forward(batch.past_inputs), batch.targets)

    def predict_arrays(self, past, future) -> dict:
        return {"point": self.forward(past).data.copy()}


def stacked_lstm_forward(model: StackedLSTM, past, future=None) -> Tensor:
    return model.forward(past, future)
