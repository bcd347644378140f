"""Naive seasonal, drift, and combined seasonal + drift forecasters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tempocast.errors import ContractError

DEFAULT_K = 7
K_SWEEP = (1, 7, 365)


def _values(train) -> np.ndarray:
    return np.asarray(getattr(train, "values", train), dtype=np.float64)


def _check_horizon(horizon: int) -> None:
    if horizon < 1:
        raise ContractError(f"horizon must be >= 1, got {horizon}")


@dataclass(frozen=True)
class NaiveDriftState:
    first: float
    last: float
    length: int

    @property
    def slope(self) -> float:
        return (self.last - self.first) / (self.length - 1)

    @classmethod
    def fit(cls, train) -> "NaiveDriftState":
        y = _values(train)
        if len(y) < 2:
            raise ContractError(f"drift needs at least 2 training points, got {len(y)}")
        return cls(float(y[0]), float(y[-1]), len(y))


def naive_seasonal_forecast(train, K: int, horizon: int) -> np.ndarray:
    """Repeat the last ``K`` training values; ``K=1`` repeats the final value."""
    y = _values(train)
    _check_horizon(horizon)
    if not 1 <= K <= len(y):
        raise ContractError(f"K must lie in [1, {len(y)}], got {K}")
    h = np.arange(horizon)
    return y[len(y) - K + (h % K)]


def naive_drift_forecast(train, horizon: int) -> np.ndarray:
    _check_horizon(horizon)
    state = NaiveDriftState.fit(train)
    return state.last + (np.arange(horizon) + 1) * state.slope


def naive_combined_forecast(train, K: int, horizon: int) -> np.ndarray:
    """Seasonal pattern re-centred on the drift line: ``seasonal[h] + (h+1) * slope``."""
    seasonal = naive_seasonal_forecast(train, K, horizon)
    slope = NaiveDriftState.fit(train).slope
    return seasonal + (np.arange(horizon) + 1) * slope
