"""Central finite-difference verification of tape gradients."""

from __future__ import annotations

import numpy as np

from .rng import RngStream

__all__ = ["grad_check"]


def grad_check(loss_builder, params, h: float = 1e-5, max_coords: int = 24, seed: int = 0) -> float:
    """Compare tape gradients against central differences.

    ``loss_builder`` must be a deterministic zero-argument callable that
    replays the same forward pass and returns ``(tape, loss_var)``. The
    analytic gradient is taken from one backward sweep; each sampled
    coordinate of each parameter is then perturbed by +/-h and the loss
    re-evaluated. Returns the maximum over sampled coordinates of

        |analytic - central| / max(|analytic|, |central|, 1e-12)
    """
    tape, loss = loss_builder()
    tape.backward(loss)
    analytic = {id(p): p.gradient.copy() for p in params}

    picker = RngStream(seed, "grad-check")
    worst = 0.0
    for p in params:
        flat = p.value.reshape(-1)
        n = flat.size
        if n <= max_coords:
            coords = np.arange(n)
        else:
            coords = picker.choice(n, size=max_coords, replace=False)
        grad_flat = analytic[id(p)].reshape(-1)
        for idx in coords:
            original = flat[idx]
            flat[idx] = original + h
            hi = float(loss_builder()[1].value)
            flat[idx] = original - h
            lo = float(loss_builder()[1].value)
            flat[idx] = original
            central = (hi - lo) / (2.0 * h)
            a = float(grad_flat[idx])
            err = abs(a - central) / max(abs(a), abs(central), 1e-12)
            worst = max(worst, err)
    return worst
