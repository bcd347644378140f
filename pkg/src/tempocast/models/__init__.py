"""Neural forecasters: TFT, TCN and stacked LSTM."""

from __future__ import annotations

from tempocast.errors import ConfigError
from tempocast.models.base import ForecastModel
from tempocast.models.config import CONFIGS, LstmConfig, TcnConfig, TftConfig
from tempocast.models.lstm import StackedLSTM
from tempocast.models.tcn import TemporalConvNet
from tempocast.models.tft import AttentionTrace, TemporalFusionTransformer

MODELS = {"tft": TemporalFusionTransformer, "tcn": TemporalConvNet, "lstm": StackedLSTM}


def build_model(kind: str, config=None, seed: int = 0) -> ForecastModel:
    try:
        cls, cfg_cls = MODELS[kind], CONFIGS[kind]
    except KeyError:
        raise ConfigError(f"unknown model {kind!r}; choose from {sorted(MODELS)}") from None
    if config is None:
        config = cfg_cls()
    elif isinstance(config, dict):
        config = cfg_cls.from_dict(config)
    return cls(config, seed=seed)


__all__ = [
    "AttentionTrace", "ForecastModel", "LstmConfig", "MODELS", "StackedLSTM", "TcnConfig",
    "TemporalConvNet", "TemporalFusionTransformer", "TftConfig", "build_model",
]
