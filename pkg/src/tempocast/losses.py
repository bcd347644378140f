"""Training objectives: mean squared error and pinball (quantile) loss."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from tempocast.autodiff import tensor as ops
from tempocast.autodiff.tensor import Tensor
from tempocast.errors import ContractError


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def mse_loss(pred, target) -> Tensor:
    pred, target = _as_tensor(pred), _as_tensor(target)
    if pred.shape != target.shape:
        raise ContractError(f"mse_loss: prediction shape {pred.shape} != target shape {target.shape}")
    diff = pred - target
    return ops.mean(diff * diff)


def quantile_loss(pred, target, quantiles: Sequence[float]) -> Tensor:
    """Mean pinball loss over elements and quantiles.

    ``pred`` has shape ``target.shape + (len(quantiles),)``. Uses the
    identity ``max(q e, (q - 1) e) = (q - 1) e + relu(e)``.
    """
    pred, target = _as_tensor(pred), _as_tensor(target)
    if pred.shape != target.shape + (len(quantiles),):
        raise ContractError(
            f"quantile_loss: prediction shape {pred.shape} != target shape {target.shape} + ({len(quantiles)},)"
        )
    total = None
    for i, q in enumerate(quantiles):
        err = target - pred[..., i]
        term = ops.mean(err * (q - 1.0) + ops.relu(err))
        total = term if total is None else total + term
    return total * (1.0 / len(quantiles))


LOSSES = ("mse", "quantile")
