"""Reverse-mode autodiff over float64 numpy arrays."""

from tempocast.autodiff.nn import Linear, LayerNorm, Module, ParameterSet, glorot_uniform
from tempocast.autodiff.optim import Adam, adam_step
from tempocast.autodiff.serialize import checksum, load_parameters, save_parameters
from tempocast.autodiff.tensor import (
    Tensor,
    concat,
    dropout,
    elementwise,
    elu,
    layer_norm,
    masked_fill,
    matmul,
    no_grad,
    pad_left,
    relu,
    sigmoid,
    softmax,
    stack,
    tanh,
)

__all__ = [
    "Adam", "LayerNorm", "Linear", "Module", "ParameterSet", "Tensor", "adam_step", "checksum",
    "concat", "dropout", "elementwise", "elu", "glorot_uniform", "layer_norm", "load_parameters",
    "masked_fill", "matmul", "no_grad", "pad_left", "relu", "save_parameters", "sigmoid", "softmax",
    "stack", "tanh",
]
