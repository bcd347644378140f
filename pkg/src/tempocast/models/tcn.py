"""Temporal convolutional network of residual causal dilated blocks."""

from __future__ import annotations

import numpy as np

from tempocast.autodiff import tensor as ops
from tempocast.autodiff.nn import Linear, Module
from tempocast.autodiff.tensor import Tensor
from tempocast.data import WindowBatch
from tempocast.errors import ConfigError
from tempocast.losses import mse_loss
from tempocast.models.base import ForecastModel, require_windows
from tempocast.models.config import TcnConfig
from tempocast.models.layers import CausalConv1d, Dropout


class ResidualBlock(Module):
    def __init__(self, in_ch: int, out_ch: int, kernel_size: int, dilation: int, dropout: float, rng, drop_rng):
        super().__init__()
        self.conv1 = CausalConv1d(in_ch, out_ch, kernel_size, dilation, rng)
        self.conv2 = CausalConv1d(out_ch, out_ch, kernel_size, dilation, rng)
        self.drop1 = Dropout(dropout, drop_rng)
        self.drop2 = Dropout(dropout, drop_rng)
        self.residual = Linear(in_ch, out_ch, rng) if in_ch != out_ch else None

    def __call__(self, x: Tensor) -> Tensor:
        y = self.drop1(ops.relu(self.conv1(x)))
        y = self.drop2(ops.relu(self.conv2(y)))
        return y + (x if self.residual is None else self.residual(x))


class TemporalConvNet(ForecastModel):
    """Maps the k-step window to the same-length sequence shifted n steps ahead.

    Input row i carries the target at window position i together with the
    calendar covariates of its prediction date (i + n), which are known in
    advance. The last n outputs form the forecast.
    """

    kind = "tcn"

    def __init__(self, config: TcnConfig = TcnConfig(), seed: int = 0):
        if config.input_len < config.output_len:
            raise ConfigError(
                f"TCN needs input_len >= output_len, got {config.input_len} < {config.output_len}"
            )
        super().__init__(config, seed)
        rng = self.init_rng
        in_ch = 1 + config.n_covariates
        blocks = []
        for level in range(config.layers):
            blocks.append(
                ResidualBlock(
                    in_ch if level == 0 else config.filters,
                    config.filters,
                    config.kernel_size,
                    config.dilation_base**level,
                    config.dropout,
                    rng,
                    self.drop_rng,
                )
            )
        self.blocks = blocks
        self.output = Linear(config.filters, 1, rng)

    @property
    def receptive_field(self) -> int:
        return self.config.receptive_field

    def sequence_forward(self, x) -> Tensor:
        """(B, L, 1 + c) -> (B, L, 1), causal in L."""
        h = x if isinstance(x, Tensor) else Tensor(x)
        for block in self.blocks:
            h = block(h)
        return self.output(h)

    def assemble_inputs(self, past: np.ndarray, future: np.ndarray) -> np.ndarray:
        k, n = self.input_len, self.output_len
        cov = np.concatenate([past[..., 1:], future], axis=1)
        return np.concatenate([past[..., :1], cov[:, n : n + k]], axis=-1)

    def forward(self, past, future) -> Tensor:
        return self.sequence_forward(self.assemble_inputs(np.asarray(past), np.asarray(future)))

    def training_loss(self, batch: WindowBatch, kind: str | None = None) -> Tensor:
        self.resolve_loss(kind)
        require_windows(batch, self)
        k, n = self.input_len, self.output_len
        full = np.concatenate([batch.past_inputs[..., 0], batch.targets], axis=1)
        out = self.forward(batch.past_inputs, batch.future_covariates)
        return mse_loss(out[..., 0], full[:, n : n + k])

    def predict_arrays(self, past, future) -> dict:
        out = self.forward(past, future).data[..., 0]
        return {"point": out[:, -self.output_len :].copy()}


def tcn_forward(model: TemporalConvNet, past, future) -> Tensor:
    return model.forward(past, future)
