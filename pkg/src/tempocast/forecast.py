"""Long-horizon forecasts stitched from consecutive model chunks."""

from __future__ import annotations

import datetime as dt
import math
import time
from dataclasses import dataclass, field

import numpy as np

from tempocast.data import COVARIATE_NAMES, ONE_DAY, TimeSeries, calendar_matrix
from tempocast.errors import ContractError


@dataclass
class ForecastResult:
    model: str
    start_date: dt.date
    point: np.ndarray
    quantiles: dict[float, np.ndarray] | None = None
    mape: float | None = None
    train_seconds: float | None = None
    predict_seconds: float | None = None
    calls: int = 0
    traces: list = field(default_factory=list)

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=np.float64)

    @property
    def horizon(self) -> int:
        return len(self.point)

    def dates(self) -> list[dt.date]:
        return [self.start_date + i * ONE_DAY for i in range(self.horizon)]


def _covariates_for(series: TimeSeries, total: int, n_cov: int) -> np.ndarray:
    if series.covariates:
        cov = np.stack([series.covariates[name] for name in COVARIATE_NAMES], axis=1)
        if len(cov) < total:
            raise ContractError(
                f"missing future covariates: need {total} rows from {series.start_date}, have {len(cov)}"
            )
        cov = cov[:total]
    else:
        cov = calendar_matrix(series.start_date, total)
    if cov.shape[1] != n_cov:
        raise ContractError(f"model expects {n_cov} covariates, series provides {cov.shape[1]}")
    return cov


def predict_stitched(model, series: TimeSeries, horizon: int, actual=None) -> ForecastResult:
    """Forecast ``horizon`` days after the end of ``series``.

    Each call emits ``output_len`` steps whose point forecasts are appended
    to the input window for the next call. With ``actual`` (scaled values of
    the forecast period) the window is re-anchored on the true values after
    every chunk instead. Values are returned in original units when the
    series carries a scale state.
    """
    if horizon < 1:
        raise ContractError(f"horizon must be >= 1, got {horizon}")
    k, n = model.input_len, model.output_len
    if len(series) < k:
        raise ContractError(f"history of length {len(series)} is shorter than the lookback {k}")
    calls = math.ceil(horizon / n)
    base = len(series)
    cov = _covariates_for(series, base + calls * n, model.config.n_covariates)
    if actual is not None:
        actual = np.asarray(actual, dtype=np.float64)
        if len(actual) < horizon:
            raise ContractError(f"re-anchoring needs {horizon} actual values, got {len(actual)}")
    history = np.concatenate([series.values, np.zeros(calls * n)])
    feed = history.copy()
    points, bands, traces = [], {}, []
    t0 = time.perf_counter()
    for call in range(calls):
        end = base + call * n
        past = np.concatenate([feed[end - k : end, None], cov[end - k : end]], axis=1)[None]
        future = cov[end : end + n][None]
        out = model.predict(past, future)
        step = out["point"][0]
        points.append(step)
        for q, v in (out.get("quantiles") or {}).items():
            bands.setdefault(q, []).append(v[0])
        if "trace" in out:
            traces.append(out["trace"])
        feed[end : end + n] = step
        if actual is not None:
            m = min(n, len(actual) - call * n)
            feed[end : end + m] = actual[call * n : call * n + m]
    elapsed = time.perf_counter() - t0
    point = np.concatenate(points)[:horizon]
    quantiles = {q: np.concatenate(v)[:horizon] for q, v in bands.items()} or None
    if series.scale_state is not None:
        point = series.scale_state.inverse(point)
        if quantiles:
            quantiles = {q: series.scale_state.inverse(v) for q, v in quantiles.items()}
    return ForecastResult(
        model=model.kind,
        start_date=series.end_date + ONE_DAY,
        point=point,
        quantiles=quantiles,
        predict_seconds=elapsed,
        calls=calls,
        traces=traces,
    )
