"""Shared surface of the neural forecasters."""

from __future__ import annotations

import numpy as np

from tempocast.autodiff.nn import Module
from tempocast.autodiff.tensor import Tensor, no_grad
from tempocast.data import WindowBatch
from tempocast.errors import ConfigError, DimensionError, ContractError


class ForecastModel(Module):
    """A model mapping (past inputs, future covariates) to ``output_len`` forecasts.

    ``past`` is (B, k, 1 + c) with the scaled target in channel 0 and
    ``future`` is (B, n, c).
    """

    kind = ""
    default_loss = "mse"
    losses = ("mse",)

    def __init__(self, config, seed: int = 0):
        super().__init__()
        self.config = config
        self.seed = seed
        self.init_rng = np.random.default_rng(seed)
        self.drop_rng = np.random.default_rng([seed, 1])

    @property
    def input_len(self) -> int:
        return self.config.input_len

    @property
    def output_len(self) -> int:
        return self.config.output_len

    @property
    def quantiles(self) -> tuple[float, ...] | None:
        return None

    def check_inputs(self, past, future) -> tuple[np.ndarray, np.ndarray]:
        past = np.asarray(past, dtype=np.float64)
        future = np.asarray(future, dtype=np.float64)
        c = self.config.n_covariates
        k, n = self.input_len, self.output_len
        if past.ndim != 3 or past.shape[1:] != (k, 1 + c):
            raise DimensionError(f"{self.kind}: past inputs must be (B, {k}, {1 + c}), got {past.shape}")
        if future.ndim != 3 or future.shape[1:] != (n, c) or len(future) != len(past):
            raise DimensionError(f"{self.kind}: future covariates must be (B, {n}, {c}), got {future.shape}")
        return past, future

    def resolve_loss(self, kind: str | None) -> str:
        kind = kind or self.default_loss
        if kind not in self.losses:
            raise ConfigError(f"{self.kind} supports losses {self.losses}, got {kind!r}")
        return kind

    def training_loss(self, batch: WindowBatch, kind: str | None = None) -> Tensor:
        raise NotImplementedError

    def predict_arrays(self, past, future) -> dict:
        raise NotImplementedError

    def predict(self, past, future) -> dict:
        """Inference in eval mode without recording a graph.

        Returns ``{"point": (B, n)}`` plus ``"quantiles"`` and ``"trace"``
        where the model provides them.
        """
        was_training = self.training
        self.eval()
        try:
            with no_grad():
                return self.predict_arrays(*self.check_inputs(past, future))
        finally:
            self.train(was_training)


def require_windows(batch: WindowBatch, model: ForecastModel) -> None:
    if batch.k != model.input_len or batch.n != model.output_len:
        raise ContractError(
            f"{model.kind}: windows are (k={batch.k}, n={batch.n}) but the model needs "
            f"(k={model.input_len}, n={model.output_len})"
        )
