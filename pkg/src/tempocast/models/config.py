"""Hyperparameter records for the three neural forecasters."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from tempocast.data import N_COVARIATES
from tempocast.errors import ConfigError


class _Config:
    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out

    @classmethod
    def from_dict(cls, data: dict):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"{cls.__name__}: unknown fields {sorted(unknown)}")
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**kwargs)

    def updated(self, overrides: dict):
        return self.from_dict({**self.to_dict(), **overrides})


def _check_common(cfg) -> None:
    if cfg.input_len < 1 or cfg.output_len < 1:
        raise ConfigError(f"input_len and output_len must be >= 1, got {cfg.input_len}, {cfg.output_len}")
    if not 0.0 <= cfg.dropout < 1.0:
        raise ConfigError(f"dropout must lie in [0, 1), got {cfg.dropout}")
    if cfg.n_covariates < 0:
        raise ConfigError("n_covariates must be >= 0")


@dataclass(frozen=True)
class TftConfig(_Config):
    input_len: int = 30
    output_len: int = 36
    hidden_size: int = 64
    lstm_layers: int = 4
    attention_heads: int = 2
    dropout: float = 0.1
    quantiles: tuple[float, ...] = (0.1, 0.5, 0.9)
    n_covariates: int = N_COVARIATES

    def __post_init__(self):
        _check_common(self)
        if self.hidden_size < 1 or self.lstm_layers < 1 or self.attention_heads < 1:
            raise ConfigError("hidden_size, lstm_layers and attention_heads must be >= 1")
        if self.hidden_size % self.attention_heads:
            raise ConfigError(
                f"hidden_size {self.hidden_size} is not divisible by attention_heads {self.attention_heads}"
            )
        q = tuple(self.quantiles)
        if any(not 0.0 < x < 1.0 for x in q) or any(b <= a for a, b in zip(q, q[1:])):
            raise ConfigError(f"quantiles must be strictly increasing inside (0, 1), got {q}")
        if 0.5 not in q:
            raise ConfigError("quantiles must include 0.5 (the point forecast)")

    @property
    def median_index(self) -> int:
        return list(self.quantiles).index(0.5)


@dataclass(frozen=True)
class TcnConfig(_Config):
    input_len: int = 30
    output_len: int = 28
    kernel_size: int = 3
    filters: int = 6
    layers: int = 4
    dilation_base: int = 2
    dropout: float = 0.1
    n_covariates: int = N_COVARIATES

    def __post_init__(self):
        _check_common(self)
        if self.kernel_size < 2:
            raise ConfigError(f"kernel_size must be >= 2, got {self.kernel_size}")
        if self.layers < 1 or self.filters < 1:
            raise ConfigError("layers and filters must be >= 1")
        if self.dilation_base < 2:
            raise ConfigError(f"dilation_base must be >= 2, got {self.dilation_base}")

    @property
    def receptive_field(self) -> int:
        b = self.dilation_base
        return 1 + 2 * (self.kernel_size - 1) * (b**self.layers - 1) // (b - 1)


@dataclass(frozen=True)
class LstmConfig(_Config):
    input_len: int = 30
    output_len: int = 36
    hidden_size: int = 25
    rnn_layers: int = 3
    dropout: float = 0.1
    n_covariates: int = N_COVARIATES

    def __post_init__(self):
        _check_common(self)
        if self.hidden_size < 1 or self.rnn_layers < 1:
            raise ConfigError("hidden_size and rnn_layers must be >= 1")


CONFIGS = {"tft": TftConfig, "tcn": TcnConfig, "lstm": LstmConfig}
