"""``tempocast`` command line: bench, train, predict, inspect, synth.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import sys
from pathlib import Path


from tempocast.bench import BenchmarkRun, StageError, mape, run_benchmark
from tempocast.checkpoint import load_checkpoint, read_meta, save_checkpoint
from tempocast.data import (
    apply_scale,
    load_series,
    make_windows,
    minmax_fit_transform,
    synthetic_series,
    train_test_split,
    write_series,
)
from tempocast.errors import ConfigError, LoadError, MetricError, ScaleError, TempocastError
from tempocast.forecast import predict_stitched
from tempocast.models import CONFIGS, MODELS, build_model
from tempocast.training import TrainConfig, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3
DATA_ERRORS = (LoadError, ScaleError, MetricError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


class DataMismatch(TempocastError):
    """Command-line flags contradict a checkpoint."""


def _load_overrides(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return data


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tempocast", description="Peak demand forecasting benchmark.")
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bench", help="train and compare all four models")
    b.add_argument("--data", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--horizon", type=int, default=365)
    b.add_argument("--seed", type=int, default=42)
    b.add_argument("--epochs", type=int, default=None, help="overrides every model's epochs (default 200)")
    b.add_argument("--rolling", action="store_true", help="re-anchor on true values after every chunk")
    b.add_argument("--config", default=None, help="JSON with tft/lstm/tcn/train/naive sections")
    b.add_argument("--timings", action="store_true", help="record wall-clock seconds in results.csv")
    b.add_argument("--emit-scaled", action="store_true", help="also write the scaled training series cache")

    t = sub.add_parser("train", help="train one model and write a checkpoint")
    t.add_argument("model", choices=sorted(MODELS))
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True, help="output directory")
    t.add_argument("--horizon", type=int, default=365, help="held-out tail length")
    t.add_argument("--seed", type=int, default=42)
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--config", default=None)
    t.add_argument("--checkpoint-every", type=int, default=0)

    r = sub.add_parser("predict", help="forecast past the end of a data file from a checkpoint")
    r.add_argument("checkpoint")
    r.add_argument("--data", required=True)
    r.add_argument("--out", required=True, help="forecast CSV path")
    r.add_argument("--horizon", type=int, default=365)
    r.add_argument("--model", choices=sorted(MODELS), default=None)
    r.add_argument("--input-len", type=int, default=None)
    r.add_argument("--output-len", type=int, default=None)
    r.add_argument("--config", default=None)

    i = sub.add_parser("inspect", help="print a checkpoint's config and parameter statistics")
    i.add_argument("checkpoint")

    s = sub.add_parser("synth", help="write the synthetic acceptance dataset")
    s.add_argument("--days", type=int, default=2191)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--start", default="2014-01-01")
    s.add_argument("--out", required=True)
    return p


# ---------------------------------------------------------------- commands
def cmd_bench(args) -> int:
    run = BenchmarkRun(
        data_path=Path(args.data),
        out_dir=Path(args.out),
        horizon=args.horizon,
        seed=args.seed,
        epochs=args.epochs,
        rolling=args.rolling,
        timings=args.timings,
        overrides=_load_overrides(args.config),
    )
    outcome = run_benchmark(run)
    if args.emit_scaled:
        train_s, _ = train_test_split(load_series(run.data_path), run.horizon)
        write_series(train_s, Path(args.out) / "train_scaled.csv")
    print(outcome.table())
    print(f"naive seasonal+drift lag chosen: K={outcome.naive_k}")
    return EXIT_OK


def cmd_train(args) -> int:
    overrides = _load_overrides(args.config)
    section = {k: v for k, v in overrides.get(args.model, {}).items() if k != "train"}
    model_cfg = CONFIGS[args.model]().updated(section)
    train_cfg = TrainConfig(seed=args.seed, checkpoint_every=args.checkpoint_every)
    train_cfg = train_cfg.updated(overrides.get("train", {}))
    train_cfg = train_cfg.updated(overrides.get(args.model, {}).get("train", {}))
    if args.epochs is not None:
        train_cfg = train_cfg.updated({"epochs": args.epochs})
    series = load_series(args.data)
    train_s, test_s = train_test_split(series, args.horizon)
    model = build_model(args.model, model_cfg, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = train(model, make_windows(train_s, model.input_len, model.output_len), train_cfg,
                   checkpoint_dir=out, scale_state=train_s.scale_state)
    path = save_checkpoint(model, out / args.model, train_s.scale_state, extra={"train": train_cfg.to_dict()})
    report.to_csv(out / f"{args.model}_train_report.csv")
    result = predict_stitched(model, train_s, len(test_s))
    score = mape(train_s.scale_state.inverse(test_s.values), result.point)
    print(f"checkpoint: {path}")
    print(f"final training loss: {report.losses[-1]:.6f}  holdout MAPE: {score:.3f}%")
    return EXIT_OK


def _check_predict_flags(args, meta: dict) -> None:
    problems = []
    if args.model and args.model != meta["model"]:
        problems.append(f"--model {args.model} but checkpoint holds {meta['model']}")
    requested = dict(_load_overrides(args.config).get(meta["model"], {}))
    requested.pop("train", None)
    if args.input_len is not None:
        requested["input_len"] = args.input_len
    if args.output_len is not None:
        requested["output_len"] = args.output_len
    for key, value in requested.items():
        stored = meta["config"].get(key, "<absent>")
        if stored != value:
            problems.append(f"{key}={value!r} but checkpoint has {stored!r}")
    if problems:
        raise DataMismatch("checkpoint/flag mismatch: " + "; ".join(problems))


def cmd_predict(args) -> int:
    meta = read_meta(args.checkpoint)
    _check_predict_flags(args, meta)
    model, scale, _ = load_checkpoint(args.checkpoint)
    series = load_series(args.data)
    scaled = apply_scale(series, scale) if scale else minmax_fit_transform(series)
    result = predict_stitched(model, scaled, args.horizon)
    bands = {q: v for q, v in (result.quantiles or {}).items() if q != 0.5}
    lines = ["date,predicted_mw" + "".join(f",q{round(q * 100):02d}" for q in bands)]
    for i, day in enumerate(result.dates()):
        lines.append(f"{day.isoformat()},{result.point[i]:.6f}" + "".join(f",{v[i]:.6f}" for v in bands.values()))
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote {result.horizon} forecast days to {args.out} ({result.calls} model calls)")
    return EXIT_OK


def cmd_inspect(args) -> int:
    model, scale, meta = load_checkpoint(args.checkpoint)
    print(f"model: {meta['model']}  seed: {meta.get('seed')}  checksum: {meta.get('checksum')}")
    print("config: " + json.dumps(meta["config"], sort_keys=True))
    if scale:
        print(f"scale: min={scale.min} max={scale.max}")
    print(f"{'parameter':<48} {'shape':<14} {'mean':>11} {'std':>11} {'min':>11} {'max':>11}")
    for name, t in model.parameter_set():
        d = t.data
        print(f"{name:<48} {str(d.shape):<14} {d.mean():>11.4g} {d.std():>11.4g} {d.min():>11.4g} {d.max():>11.4g}")
    print(f"total parameters: {model.num_parameters()}")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.days < 2:
        raise ConfigError("--days must be >= 2")
    series = synthetic_series(args.days, seed=args.seed, start=dt.date.fromisoformat(args.start))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_series(series, args.out)
    print(f"wrote {len(series)} days to {args.out}")
    return EXIT_OK


COMMANDS = {"bench": cmd_bench, "train": cmd_train, "predict": cmd_predict, "inspect": cmd_inspect, "synth": cmd_synth}


def _exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, (DataMismatch, *DATA_ERRORS, FileNotFoundError)):
        return EXIT_DATA
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    return EXIT_RUNTIME


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (TempocastError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
