"""Cross-model benchmark: split, train, stitch one-year forecasts, score MAPE, write artifacts."""

from __future__ import annotations

import concurrent.futures
import logging
import os
import shutil
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tempocast.baselines import K_SWEEP, naive_combined_forecast
from tempocast.data import COVARIATE_NAMES, TimeSeries, load_series, make_windows, train_test_split
from tempocast.errors import ContractError, MetricError, TempocastError
from tempocast.forecast import ForecastResult, predict_stitched
from tempocast.models import CONFIGS, build_model
from tempocast.plot import write_forecast_svg
from tempocast.training import TrainConfig, train

log = logging.getLogger(__name__)

# Row order and labels of the comparison table.
MODEL_ORDER = ("tft", "lstm", "tcn", "naive")
LABELS = {"tft": "TFT", "lstm": "Stacked LSTMs", "tcn": "TCN", "naive": "Naive Forecasting"}
NEURAL = ("tft", "lstm", "tcn")


def mape(actual, predicted) -> float:
    """Mean absolute percentage error, in percent."""
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.shape != p.shape or a.ndim != 1:
        raise ContractError(f"mape needs equal-length 1-D series, got {a.shape} and {p.shape}")
    if a.size == 0:
        raise ContractError("mape needs at least one point")
    if np.any(a == 0):
        raise MetricError(f"mape undefined: actual value 0 at index {int(np.flatnonzero(a == 0)[0])}")
    return float(100.0 / a.size * np.sum(np.abs(a - p) / np.abs(a)))


class StageError(TempocastError):
    """A benchmark stage failed; ``stage`` names it and ``__cause__`` holds the reason."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class BenchmarkRun:
    data_path: Path
    out_dir: Path
    horizon: int = 365
    seed: int = 42
    epochs: int | None = None
    rolling: bool = False
    timings: bool = False
    overrides: dict = field(default_factory=dict)
    threads: int | None = None

    def model_config(self, kind: str):
        section = {k: v for k, v in self.overrides.get(kind, {}).items() if k != "train"}
        return CONFIGS[kind]().updated(section)

    def train_config(self, kind: str) -> TrainConfig:
        cfg = TrainConfig(seed=self.seed)
        cfg = cfg.updated(self.overrides.get("train", {}))
        cfg = cfg.updated(self.overrides.get(kind, {}).get("train", {}))
        if self.epochs is not None:
            cfg = cfg.updated({"epochs": self.epochs})
        return cfg

    def naive_ks(self) -> tuple[int, ...]:
        return tuple(self.overrides.get("naive", {}).get("ks", K_SWEEP))

    def validate(self) -> None:
        unknown = set(self.overrides) - {"tft", "lstm", "tcn", "train", "naive"}
        if unknown:
            raise ContractError(f"config file has unknown sections {sorted(unknown)}")
        for kind in NEURAL:
            self.model_config(kind)
            self.train_config(kind)


def _threads(run: BenchmarkRun) -> int:
    if run.threads is not None:
        return max(1, run.threads)
    try:
        return max(1, int(os.environ.get("TEMPOCAST_THREADS", "1")))
    except ValueError:
        return 1


def fit_and_forecast(kind: str, model_cfg, train_cfg: TrainConfig, seed: int, train_s: TimeSeries,
                     horizon: int, actual=None) -> ForecastResult:
    """Train one neural model on ``train_s`` and forecast ``horizon`` days past it."""
    stage = f"train:{kind}"
    try:
        model = build_model(kind, model_cfg, seed=seed)
        windows = make_windows(train_s, model.input_len, model.output_len)
        t0 = time.perf_counter()
        report = train(model, windows, train_cfg)
        train_seconds = time.perf_counter() - t0
        stage = f"predict:{kind}"
        result = predict_stitched(model, train_s, horizon, actual=actual)
    except TempocastError as exc:
        raise StageError(stage, exc) from exc
    result.train_seconds = train_seconds
    log.info("%s trained in %.1fs, final loss %.6f", kind, train_seconds, report.losses[-1])
    return result


def naive_forecast(train_mw: np.ndarray, test_mw: np.ndarray, start, ks) -> tuple[ForecastResult, int]:
    """Combined seasonal + drift forecast with the best K of the sweep (ties go to smaller K)."""
    best = None
    for K in sorted(ks):
        if K > len(train_mw):
            continue
        t0 = time.perf_counter()
        pred = naive_combined_forecast(train_mw, K, len(test_mw))
        elapsed = time.perf_counter() - t0
        score = mape(test_mw, pred)
        if best is None or score < best[0]:
            best = (score, K, pred, elapsed)
    if best is None:
        raise ContractError(f"no seasonal lag in {tuple(ks)} fits a training series of length {len(train_mw)}")
    score, K, pred, elapsed = best
    result = ForecastResult(model="naive", start_date=start, point=pred, mape=score,
                            train_seconds=0.0, predict_seconds=elapsed, calls=1)
    return result, K


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def write_results_csv(path: Path, results: dict[str, ForecastResult], timings: bool) -> None:
    lines = ["model,mape_percent,train_seconds,predict_seconds"]
    for kind in MODEL_ORDER:
        r = results[kind]
        tr = _fmt(r.train_seconds) if timings and r.train_seconds is not None else ""
        pr = _fmt(r.predict_seconds) if timings and r.predict_seconds is not None else ""
        lines.append(f"{LABELS[kind]},{_fmt(r.mape)},{tr},{pr}")
    path.write_text("\n".join(lines) + "\n")


def _quantile_column(q: float) -> str:
    return f"q{round(q * 100):02d}"


def write_forecast_csv(path: Path, result: ForecastResult, actual_mw: np.ndarray) -> None:
    bands = {q: v for q, v in (result.quantiles or {}).items() if q != 0.5}
    header = ["date", "actual_mw", "predicted_mw"] + [_quantile_column(q) for q in bands]
    lines = [",".join(header)]
    for i, day in enumerate(result.dates()):
        row = [day.isoformat(), _fmt(actual_mw[i]), _fmt(result.point[i])]
        row += [_fmt(v[i]) for v in bands.values()]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def write_trace_csvs(out: Path, result: ForecastResult) -> None:
    attn = ["call,head,query_pos,key_pos,weight"]
    sel = ["call,block,step,variable,weight"]
    past_names = ("target",) + COVARIATE_NAMES
    for call, trace in enumerate(result.traces):
        w = trace.attention[0]
        heads, length, _ = w.shape
        for h in range(heads):
            for q in range(length):
                for k in range(q + 1):
                    attn.append(f"{call},{h},{q},{k},{w[h, q, k]:.8f}")
        for block, weights, names in (("past", trace.past_selection[0], past_names),
                                      ("future", trace.future_selection[0], COVARIATE_NAMES)):
            for step, row in enumerate(weights):
                for name, value in zip(names, row):
                    sel.append(f"{call},{block},{step},{name},{value:.8f}")
    (out / "tft_attention.csv").write_text("\n".join(attn) + "\n")
    (out / "tft_variable_selection.csv").write_text("\n".join(sel) + "\n")


def run_benchmark(run: BenchmarkRun) -> "BenchmarkOutcome":
    """Execute the full comparison and write artifacts into ``run.out_dir``.

    Artifacts are assembled in a staging directory and only copied into the
    output directory once every stage has succeeded.
    """
    stage = "config"
    try:
        run.validate()
        stage = "load"
        series = load_series(run.data_path)
        stage = "split"
        train_s, test_s = train_test_split(series, run.horizon)
    except TempocastError as exc:
        raise StageError(stage, exc) from exc
    scale = train_s.scale_state
    train_mw, test_mw = scale.inverse(train_s.values), scale.inverse(test_s.values)
    actual = test_s.values if run.rolling else None

    jobs = {kind: (kind, run.model_config(kind), run.train_config(kind), run.seed, train_s, run.horizon, actual)
            for kind in NEURAL}
    results: dict[str, ForecastResult] = {}
    workers = min(_threads(run), len(jobs))
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {kind: pool.submit(fit_and_forecast, *args) for kind, args in jobs.items()}
            for kind in NEURAL:
                results[kind] = futures[kind].result()
    else:
        for kind in NEURAL:
            results[kind] = fit_and_forecast(*jobs[kind])

    stage = "score"
    try:
        for kind in NEURAL:
            results[kind].mape = mape(test_mw, results[kind].point)
        results["naive"], chosen_k = naive_forecast(train_mw, test_mw, test_s.start_date, run.naive_ks())
    except TempocastError as exc:
        raise StageError(stage, exc) from exc
    log.info("naive seasonal+drift: chose K=%d", chosen_k)

    out = Path(run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out))
    try:
        stage = "write"
        write_results_csv(staging / "results.csv", results, run.timings)
        for kind in MODEL_ORDER:
            r = results[kind]
            write_forecast_csv(staging / f"forecast_{kind}.csv", r, test_mw)
            band = None
            if r.quantiles and 0.1 in r.quantiles and 0.9 in r.quantiles:
                band = (r.quantiles[0.1], r.quantiles[0.9])
            write_forecast_svg(staging / f"plot_{kind}.svg", r.dates(), test_mw, r.point, band=band,
                               title=f"{LABELS[kind]}: MAPE {r.mape:.2f}%")
        write_trace_csvs(staging, results["tft"])
        for f in sorted(staging.iterdir()):
            os.replace(f, out / f.name)
    except Exception as exc:
        raise StageError(stage, exc) from exc
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return BenchmarkOutcome(results, chosen_k)


@dataclass
class BenchmarkOutcome:
    results: dict[str, ForecastResult]
    naive_k: int

    def __getitem__(self, kind: str) -> ForecastResult:
        return self.results[kind]

    def table(self) -> str:
        rows = [f"{'Model':<24} {'MAPE %':>8}"]
        for kind in MODEL_ORDER:
            label = LABELS[kind] + (f" (K={self.naive_k})" if kind == "naive" else "")
            rows.append(f"{label:<24} {self.results[kind].mape:>8.3f}")
        return "\n".join(rows)


def within_magnitude(forecast_mw: np.ndarray, train_mw: np.ndarray, lo: float = 0.2, hi: float = 5.0) -> bool:
    med = float(np.median(train_mw))
    return bool(np.all(forecast_mw >= lo * med) and np.all(forecast_mw <= hi * med))
