"""Seeded mini-batch training loop."""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tempocast.autodiff.optim import Adam
from tempocast.autodiff.serialize import checksum
from tempocast.checkpoint import save_checkpoint
from tempocast.data import WindowBatch
from tempocast.errors import ConfigError, ContractError, TrainingError
from tempocast.losses import LOSSES

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 24
    loss: str | None = None
    lr: float = 1e-3
    seed: int = 42
    shuffle: bool = True
    checkpoint_every: int = 0
    clip_norm: float | None = 10.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.loss is not None and self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every must be >= 0")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def updated(self, overrides: dict) -> "TrainConfig":
        names = {f.name for f in dataclasses.fields(self)}
        unknown = set(overrides) - names
        if unknown:
            raise ConfigError(f"TrainConfig: unknown fields {sorted(unknown)}")
        return dataclasses.replace(self, **overrides)


@dataclass
class TrainReport:
    losses: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    steps: int = 0
    checksum: str = ""

    @property
    def total_seconds(self) -> float:
        return float(sum(self.seconds))

    def to_csv(self, path) -> None:
        lines = ["epoch,loss,seconds"]
        lines += [f"{i + 1},{loss!r},{sec:.6f}" for i, (loss, sec) in enumerate(zip(self.losses, self.seconds))]
        Path(path).write_text("\n".join(lines) + "\n")


def epoch_order(n_windows: int, epoch: int, cfg: TrainConfig) -> np.ndarray:
    if not cfg.shuffle:
        return np.arange(n_windows)
    return np.random.default_rng([cfg.seed, epoch]).permutation(n_windows)


def train(model, windows: WindowBatch, cfg: TrainConfig, checkpoint_dir=None, scale_state=None) -> TrainReport:
    """Fit ``model`` on ``windows``; the final partial batch is kept."""
    if len(windows) == 0:
        raise ContractError("training needs at least one window")
    kind = model.resolve_loss(cfg.loss)
    optimizer = Adam(model.parameter_set(), lr=cfg.lr, clip_norm=cfg.clip_norm)
    report = TrainReport()
    model.train()
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        total, count = 0.0, 0
        for b, batch in enumerate(windows.batches(cfg.batch_size, epoch_order(len(windows), epoch, cfg))):
            loss = model.training_loss(batch, kind)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingError(f"{model.kind}: non-finite loss {value} at epoch {epoch}, batch {b + 1}")
            loss.backward()
            optimizer.step()
            report.steps += 1
            total += value * len(batch)
            count += len(batch)
        report.losses.append(total / count)
        report.seconds.append(time.perf_counter() - t0)
        log.info("%s epoch %d/%d loss %.6f (%.1fs)", model.kind, epoch, cfg.epochs, report.losses[-1], report.seconds[-1])
        if checkpoint_dir and cfg.checkpoint_every and epoch % cfg.checkpoint_every == 0:
            save_checkpoint(model, Path(checkpoint_dir) / f"{model.kind}_epoch{epoch:04d}", scale_state)
    model.eval()
    report.checksum = checksum(model.parameter_set())
    return report
