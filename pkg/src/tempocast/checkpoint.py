"""Model checkpoints: a parameter file plus a JSON config sidecar."""

from __future__ import annotations

import json
from pathlib import Path

from tempocast.autodiff.serialize import checksum, load_parameters, save_parameters
from tempocast.data import ScaleState
from tempocast.errors import ContractError
from tempocast.models import build_model

FORMAT = "tempocast-checkpoint/1"


def _paths(path) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix in (".tcast", ".json"):
        p = p.with_suffix("")
    return p.with_suffix(".tcast"), p.with_suffix(".json")


def save_checkpoint(model, path, scale_state: ScaleState | None = None, extra: dict | None = None) -> Path:
    params_path, meta_path = _paths(path)
    params_path.parent.mkdir(parents=True, exist_ok=True)
    params = model.parameter_set()
    save_parameters(params, params_path)
    meta = {
        "format": FORMAT,
        "model": model.kind,
        "seed": model.seed,
        "config": model.config.to_dict(),
        "scale_state": scale_state.to_dict() if scale_state else None,
        "checksum": checksum(params),
    }
    if extra:
        meta.update(extra)
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return params_path


def read_meta(path) -> dict:
    _, meta_path = _paths(path)
    if not meta_path.exists():
        raise ContractError(f"checkpoint sidecar {meta_path} not found")
    meta = json.loads(meta_path.read_text())
    if meta.get("format") != FORMAT:
        raise ContractError(f"{meta_path}: unsupported checkpoint format {meta.get('format')!r}")
    return meta


def load_checkpoint(path):
    """Rebuild the model described by the sidecar and load its parameters."""
    params_path, _ = _paths(path)
    meta = read_meta(path)
    model = build_model(meta["model"], meta["config"], seed=meta.get("seed", 0))
    load_parameters(model.parameter_set(), params_path)
    model.eval()
    scale = meta.get("scale_state")
    return model, (ScaleState(scale["min"], scale["max"]) if scale else None), meta
