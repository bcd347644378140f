"""Daily demand series: CSV loading, min-max scaling, calendar covariates, windowing."""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

import numpy as np

from tempocast.errors import ContractError, LoadError, ScaleError

ONE_DAY = dt.timedelta(days=1)

COVARIATE_NAMES = (
    "dow_mon", "dow_tue", "dow_wed", "dow_thu", "dow_fri", "dow_sat", "dow_sun",
    "month_sin", "month_cos", "doy_sin", "doy_cos",
)
N_COVARIATES = len(COVARIATE_NAMES)


@dataclass(frozen=True)
class ScaleState:
    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise ScaleError(f"scale state needs max > min, got min={self.min} max={self.max}")

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.min) / (self.max - self.min)

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * (self.max - self.min) + self.min

    def to_dict(self) -> dict:
        return {"min": self.min, "max": self.max}


@dataclass(frozen=True)
class TimeSeries:
    """Consecutive daily observations starting at ``start_date``.

    ``covariates`` channels may run past the last observation so that
    future-known inputs exist for forecast steps.
    """

    start_date: dt.date
    values: np.ndarray
    covariates: dict[str, np.ndarray] = field(default_factory=dict)
    scale_state: ScaleState | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size == 0:
            raise ContractError("a series needs a non-empty 1-D value array")
        object.__setattr__(self, "values", vals)
        for name, ch in self.covariates.items():
            if len(ch) < len(vals):
                raise ContractError(f"covariate {name!r} is shorter than the series ({len(ch)} < {len(vals)})")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end_date(self) -> dt.date:
        return self.start_date + (len(self) - 1) * ONE_DAY

    def dates(self) -> list[dt.date]:
        return [self.start_date + i * ONE_DAY for i in range(len(self))]

    def slice(self, start: int, stop: int | None = None) -> "TimeSeries":
        stop = len(self) if stop is None else stop
        return replace(
            self,
            start_date=self.start_date + start * ONE_DAY,
            values=self.values[start:stop].copy(),
            covariates={k: v[start:].copy() for k, v in self.covariates.items()},
        )


# ---------------------------------------------------------------- loading
def load_series(source) -> TimeSeries:
    """Parse a two-column ``date,demand`` CSV into a validated series.

    ``source`` is a path or an open text stream. Row numbers in errors
    count the header as row 1.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return _parse(fh)
    return _parse(source)


def _parse(fh) -> TimeSeries:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None:
        raise LoadError("row 1: empty file")
    if [h.strip().lower() for h in header] != ["date", "demand"]:
        raise LoadError(f"row 1: expected header 'date,demand', got {','.join(header)!r}")
    dates: list[dt.date] = []
    values: list[float] = []
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise LoadError(f"row {row_no}: expected 2 columns, got {len(row)}")
        try:
            day = dt.date.fromisoformat(row[0].strip())
        except ValueError:
            raise LoadError(f"row {row_no}: malformed date {row[0]!r}") from None
        try:
            value = float(row[1])
        except ValueError:
            raise LoadError(f"row {row_no}: non-numeric demand {row[1]!r}") from None
        if not math.isfinite(value) or value <= 0:
            raise LoadError(f"row {row_no}: demand must be positive, got {row[1]!r}")
        if dates:
            step = (day - dates[-1]).days
            if step == 0:
                raise LoadError(f"row {row_no}: duplicate date {day.isoformat()}")
            if step != 1:
                raise LoadError(f"row {row_no}: date gap, {dates[-1].isoformat()} followed by {day.isoformat()}")
        dates.append(day)
        values.append(value)
    if not values:
        raise LoadError("row 2: no data rows")
    return TimeSeries(start_date=dates[0], values=np.array(values))


def write_series(series: TimeSeries, path) -> None:
    """Write ``date,demand`` CSV in the loader's dialect."""
    buf = io.StringIO()
    buf.write("date,demand\n")
    for day, v in zip(series.dates(), series.values):
        buf.write(f"{day.isoformat()},{float(v)!r}\n")
    Path(path).write_text(buf.getvalue())


# ----------------------------------------------------------------- scaling
def minmax_fit_transform(series: TimeSeries) -> TimeSeries:
    lo, hi = float(series.values.min()), float(series.values.max())
    if hi == lo:
        raise ScaleError(f"cannot min-max scale a constant series (all values {lo})")
    state = ScaleState(lo, hi)
    return replace(series, values=state.transform(series.values), scale_state=state)


def apply_scale(series: TimeSeries, state: ScaleState) -> TimeSeries:
    return replace(series, values=state.transform(series.values), scale_state=state)


def inverse_transform(series: TimeSeries) -> TimeSeries:
    if series.scale_state is None:
        raise ContractError("inverse_transform needs a series carrying a scale state")
    return replace(series, values=series.scale_state.inverse(series.values), scale_state=None)


def train_test_split(series: TimeSeries, test_len: int) -> tuple[TimeSeries, TimeSeries]:
    """Hold out the final ``test_len`` points; scale both parts with the train fit."""
    if not 0 < test_len < len(series):
        raise ContractError(f"test_len must lie in (0, {len(series)}), got {test_len}")
    cut = len(series) - test_len
    train = minmax_fit_transform(series.slice(0, cut))
    test = apply_scale(series.slice(cut), train.scale_state)
    return train, test


# -------------------------------------------------------------- covariates
def calendar_matrix(start: dt.date, n_days: int) -> np.ndarray:
    """Calendar covariates for ``n_days`` consecutive days, shape (n_days, 11).

    Columns follow :data:`COVARIATE_NAMES`: day-of-week one-hot (Monday
    first), then cyclic month and cyclic day-of-year encodings.
    """
    days = np.datetime64(start, "D") + np.arange(n_days)
    weekday = (days.astype(np.int64) + 3) % 7  # 1970-01-01 was a Thursday
    month = days.astype("datetime64[M]").astype(np.int64) % 12 + 1
    yday = (days - days.astype("datetime64[Y]")).astype(np.int64) + 1
    out = np.zeros((n_days, N_COVARIATES))
    out[np.arange(n_days), weekday] = 1.0
    m_angle = 2.0 * np.pi * month / 12.0
    d_angle = 2.0 * np.pi * yday / 365.25
    out[:, 7:] = np.stack([np.sin(m_angle), np.cos(m_angle), np.sin(d_angle), np.cos(d_angle)], axis=1)
    return out


def calendar_covariates(series: TimeSeries, through_date: dt.date) -> dict[str, np.ndarray]:
    if through_date < series.end_date:
        raise ContractError(f"through_date {through_date} precedes the series end {series.end_date}")
    n = (through_date - series.start_date).days + 1
    mat = calendar_matrix(series.start_date, n)
    return {name: mat[:, j].copy() for j, name in enumerate(COVARIATE_NAMES)}


def with_calendar(series: TimeSeries, extra_days: int = 0) -> TimeSeries:
    return replace(series, covariates=calendar_covariates(series, series.end_date + extra_days * ONE_DAY))


def covariate_matrix(series: TimeSeries) -> np.ndarray:
    if not series.covariates:
        return calendar_matrix(series.start_date, len(series))
    return np.stack([series.covariates[name] for name in COVARIATE_NAMES], axis=1)


# ---------------------------------------------------------------- windowing
@dataclass(frozen=True)
class WindowBatch:
    """Stacked supervised windows.

    ``past_inputs`` is (B, k, 1 + c) with the target in channel 0,
    ``future_covariates`` is (B, n, c) and ``targets`` is (B, n).
    """

    past_inputs: np.ndarray
    future_covariates: np.ndarray
    targets: np.ndarray
    anchors: np.ndarray | None = None

    def __post_init__(self):
        b = len(self.past_inputs)
        if len(self.future_covariates) != b or len(self.targets) != b:
            raise ContractError("window blocks disagree on batch size")

    def __len__(self) -> int:
        return len(self.past_inputs)

    @property
    def k(self) -> int:
        return self.past_inputs.shape[1]

    @property
    def n(self) -> int:
        return self.targets.shape[1]

    def take(self, idx) -> "WindowBatch":
        anchors = None if self.anchors is None else self.anchors[idx]
        return WindowBatch(self.past_inputs[idx], self.future_covariates[idx], self.targets[idx], anchors)

    def batches(self, batch_size: int, order: np.ndarray | None = None) -> Iterator["WindowBatch"]:
        order = np.arange(len(self)) if order is None else order
        for start in range(0, len(order), batch_size):
            yield self.take(order[start : start + batch_size])


def make_windows(series: TimeSeries, k: int, n: int, stride: int = 1) -> WindowBatch:
    """Cut every (lookback k, horizon n) window anchored inside ``series``.

    The anchor t is the last observed step: past rows cover t-k+1..t and
    targets cover t+1..t+n. The future block only carries covariates.
    """
    if k < 1 or n < 1 or stride < 1:
        raise ContractError(f"k, n and stride must be positive, got k={k} n={n} stride={stride}")
    length = len(series)
    if length < k + n:
        raise ContractError(f"series of length {length} too short: need at least k + n = {k + n}")
    y = series.values
    cov = covariate_matrix(series)[:length]
    anchors = np.arange(k - 1, length - n, stride)
    past_idx = anchors[:, None] + np.arange(-k + 1, 1)[None, :]
    fut_idx = anchors[:, None] + np.arange(1, n + 1)[None, :]
    past = np.concatenate([y[past_idx][..., None], cov[past_idx]], axis=-1)
    return WindowBatch(past, cov[fut_idx], y[fut_idx], anchors)


# ---------------------------------------------------------------- synthetic
SYNTH_START = dt.date(2014, 1, 1)


def synthetic_series(days: int = 2191, seed: int = 7, start: dt.date = SYNTH_START) -> TimeSeries:
    """Trend + annual + weekly sinusoids + Gaussian noise (sigma 20 MW).

    ``y(t) = 1000 + 0.05 t + 120 sin(2 pi t / 365.25) + 60 sin(2 pi t / 7) + eps``
    """
    t = np.arange(days, dtype=np.float64)
    noise = np.random.default_rng(seed).normal(0.0, 20.0, size=days)
    y = 1000.0 + 0.05 * t + 120.0 * np.sin(2 * np.pi * t / 365.25) + 60.0 * np.sin(2 * np.pi * t / 7) + noise
    return TimeSeries(start_date=start, values=y)
