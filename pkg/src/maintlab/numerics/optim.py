"""Learnable parameters and the bias-corrected Adam update."""

from __future__ import annotations

import numpy as np

__all__ = ["Parameter", "ParameterStateError", "adam_step"]


class ParameterStateError(RuntimeError):
    """An optimizer step was requested before gradients were computed."""


class Parameter:
    """A learnable array with its gradient slot and Adam moment state.

    ``gradient`` is None until a tape backward populates it; each
    :func:`adam_step` consumes and clears it, so stepping twice without a
    fresh backward pass is a state error rather than a silent stale update.
    """

    __slots__ = ("name", "value", "gradient", "moment1", "moment2", "step_count")

    def __init__(self, value, name: str = ""):
        self.name = name
        self.value = np.array(value, dtype=np.float64)
        self.gradient = None
        self.moment1 = np.zeros_like(self.value)
        self.moment2 = np.zeros_like(self.value)
        self.step_count = 0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape}, steps={self.step_count})"


def adam_step(params, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """Apply one bias-corrected Adam update to every parameter in ``params``."""
    for p in params:
        if p.gradient is None:
            raise ParameterStateError(
                f"parameter {p.name!r} has no gradient; run backward before adam_step"
            )
        if p.gradient.shape != p.value.shape:
            raise ValueError(
                f"gradient shape {p.gradient.shape} != value shape {p.value.shape} "
                f"for parameter {p.name!r}"
            )
        g = p.gradient
        p.step_count += 1
        p.moment1 = beta1 * p.moment1 + (1.0 - beta1) * g
        p.moment2 = beta2 * p.moment2 + (1.0 - beta2) * g * g
        m_hat = p.moment1 / (1.0 - beta1**p.step_count)
        v_hat = p.moment2 / (1.0 - beta2**p.step_count)
        p.value = p.value - lr * m_hat / (np.sqrt(v_hat) + eps)
        p.gradient = None
    return params
