"""Minimal dense numerics: real FFT pair, gradient tape, Adam, grad checking."""

from .autodiff import (
    Tape,
    TapeStateError,
    Var,
    add,
    clip,
    concat,
    exp,
    gather_rows,
    gelu,
    log_softmax,
    matmul,
    mean_square_error,
    minimum,
    mode_mix,
    multiply,
    negative,
    pad_tail,
    reduce_mean,
    reduce_sum,
    relu,
    reshape,
    subtract,
    swap_last_axes,
    take_head,
    tanh,
)
from .fft import irfft, rfft, spectrum_length, validate_spectrum
from .gradcheck import grad_check
from .optim import Parameter, ParameterStateError, adam_step
from .rng import RngStream

__all__ = [
    "Tape",
    "TapeStateError",
    "Var",
    "add",
    "clip",
    "concat",
    "exp",
    "gather_rows",
    "gelu",
    "log_softmax",
    "matmul",
    "mean_square_error",
    "minimum",
    "mode_mix",
    "multiply",
    "negative",
    "pad_tail",
    "reduce_mean",
    "reduce_sum",
    "relu",
    "reshape",
    "subtract",
    "swap_last_axes",
    "take_head",
    "tanh",
    "irfft",
    "rfft",
    "spectrum_length",
    "validate_spectrum",
    "grad_check",
    "Parameter",
    "ParameterStateError",
    "adam_step",
    "RngStream",
]
