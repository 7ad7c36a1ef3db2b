"""Reverse-mode gradient tape over the dense-array op set the pipeline needs.

A :class:`Tape` records one forward pass; :meth:`Tape.backward` on a scalar
output walks the recorded graph once and deposits exact partial derivatives
on every watched :class:`~maintlab.numerics.optim.Parameter`. A tape is
single use: backing up twice, or backing up a tape that never recorded a
forward pass, raises :class:`TapeStateError`.

Op functions in this module dispatch on their inputs: called with plain
numpy arrays they just compute (fast inference path), called with at least
one :class:`Var` they record the operation for differentiation. Forward
code written against these functions therefore serves both training and
inference from a single implementation.

Supported differentiable ops: matmul (with broadcast batching), add,
subtract, elementwise multiply, negation, ReLU, GELU, tanh, exp,
sum/mean reductions, row-wise log-softmax, mean-square error, row
gather, concat/reshape/transpose/zero-padding plumbing, clip/minimum,
and the complex per-mode channel mix used by the spectral convolution
(with gradients for both real and imaginary weight parts).
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.special import erf

__all__ = [
    "Tape",
    "Var",
    "TapeStateError",
    "matmul",
    "add",
    "subtract",
    "multiply",
    "negative",
    "relu",
    "gelu",
    "tanh",
    "exp",
    "reduce_sum",
    "reduce_mean",
    "log_softmax",
    "gather_rows",
    "mean_square_error",
    "clip",
    "minimum",
    "concat",
    "reshape",
    "swap_last_axes",
    "pad_tail",
    "take_head",
    "mode_mix",
]


class TapeStateError(RuntimeError):
    """Backward called without a recorded forward pass, or called twice."""


class Var:
    """A tape-recorded array value."""

    __slots__ = ("value", "tape", "_parents")

    def __init__(self, value: np.ndarray, tape: "Tape", parents: tuple):
        self.value = value
        self.tape = tape
        self._parents = parents

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return subtract(self, other)

    def __rsub__(self, other):
        return subtract(other, self)

    def __mul__(self, other):
        return multiply(self, other)

    def __rmul__(self, other):
        return multiply(other, self)

    def __neg__(self):
        return negative(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __repr__(self):
        return f"Var(shape={self.value.shape})"


class Tape:
    """Records one forward pass; consumed by a single backward sweep."""

    def __init__(self):
        self._vars: list[Var] = []
        self._watched: list[tuple[Var, object]] = []
        self._consumed = False

    def _record(self, value, parents=()) -> Var:
        v = Var(np.asarray(value, dtype=np.float64), self, tuple(parents))
        self._vars.append(v)
        return v

    def watch(self, param) -> Var:
        """Expose a Parameter's value as a leaf of this tape.

        Watching the same Parameter again returns the existing leaf, so
        every use contributes to one accumulated gradient.
        """
        for leaf, existing in self._watched:
            if existing is param:
                return leaf
        v = self._record(param.value)
        self._watched.append((v, param))
        return v

    def constant(self, value) -> Var:
        """A tape-resident constant (no gradient flows into it)."""
        return self._record(value)

    def backward(self, out: Var) -> None:
        """Populate ``gradient`` on every watched Parameter.

        ``out`` must be a scalar recorded on this tape. Gradients are exact
        partial derivatives of ``out``; a Parameter watched more than once
        accumulates contributions from every use.
        """
        if self._consumed:
            raise TapeStateError("tape already consumed; record a fresh forward pass")
        if not self._vars:
            raise TapeStateError("backward without a recorded forward pass")
        if not isinstance(out, Var) or out.tape is not self:
            raise TapeStateError("output was not recorded on this tape")
        if out.value.size != 1:
            raise ValueError(f"backward requires a scalar output, got shape {out.value.shape}")
        self._consumed = True

        grads: dict[int, np.ndarray] = {id(out): np.ones_like(out.value)}
        for v in reversed(self._vars):
            g = grads.get(id(v))
            if g is None:
                continue
            for parent, vjp in v._parents:
                pg = vjp(g)
                acc = grads.get(id(parent))
                grads[id(parent)] = pg if acc is None else acc + pg

        for leaf, param in self._watched:
            g = grads.get(id(leaf))
            param.gradient = np.zeros_like(leaf.value) if g is None else np.asarray(g)


def _is_var(x) -> bool:
    return isinstance(x, Var)


def _value(x) -> np.ndarray:
    return x.value if _is_var(x) else np.asarray(x, dtype=np.float64)


def _tape_of(*args) -> Tape:
    tape = None
    for a in args:
        if _is_var(a):
            if tape is None:
                tape = a.tape
            elif a.tape is not tape:
                raise ValueError("operands recorded on different tapes")
    assert tape is not None
    return tape


def _sum_to_shape(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the operand's shape."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def _unary(x, fwd: Callable, vjp_factory: Callable):
    xv = _value(x)
    out = fwd(xv)
    if not _is_var(x):
        return out
    tape = x.tape
    return tape._record(out, [(x, vjp_factory(xv, out))])


def _binary(a, b, fwd: Callable, vjp_a: Callable, vjp_b: Callable):
    av, bv = _value(a), _value(b)
    out = fwd(av, bv)
    if not (_is_var(a) or _is_var(b)):
        return out
    tape = _tape_of(a, b)
    parents = []
    if _is_var(a):
        parents.append((a, lambda g: vjp_a(g, av, bv)))
    if _is_var(b):
        parents.append((b, lambda g: vjp_b(g, av, bv)))
    return tape._record(out, parents)


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b):
    return _binary(
        a,
        b,
        lambda x, y: x + y,
        lambda g, x, y: _sum_to_shape(g, x.shape),
        lambda g, x, y: _sum_to_shape(g, y.shape),
    )


def subtract(a, b):
    return _binary(
        a,
        b,
        lambda x, y: x - y,
        lambda g, x, y: _sum_to_shape(g, x.shape),
        lambda g, x, y: _sum_to_shape(-g, y.shape),
    )


def multiply(a, b):
    return _binary(
        a,
        b,
        lambda x, y: x * y,
        lambda g, x, y: _sum_to_shape(g * y, x.shape),
        lambda g, x, y: _sum_to_shape(g * x, y.shape),
    )


def negative(x):
    return _unary(x, np.negative, lambda xv, out: lambda g: -g)


def _swap(m: np.ndarray) -> np.ndarray:
    return np.swapaxes(m, -1, -2)


def matmul(a, b):
    """Matrix product; 1-D operands and broadcast batch dims follow numpy."""

    def vjp_a(g, x, y):
        if x.ndim == 1:
            return _sum_to_shape(g @ _swap(y) if y.ndim > 1 else np.outer(g, y).sum(0), x.shape)
        gy = np.expand_dims(g, -1) * y if y.ndim == 1 else g @ _swap(y)
        return _sum_to_shape(gy, x.shape)

    def vjp_b(g, x, y):
        if y.ndim == 1:
            gx = np.expand_dims(g, -1) * x if x.ndim == 1 else _swap(x) @ g
            return _sum_to_shape(gx, y.shape)
        gx = np.expand_dims(x, -1) @ np.expand_dims(g, -2) if x.ndim == 1 else _swap(x) @ g
        return _sum_to_shape(gx, y.shape)

    return _binary(a, b, np.matmul, vjp_a, vjp_b)


# ---------------------------------------------------------------------------
# activations

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _norm_cdf(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + erf(x * _INV_SQRT2))


def relu(x):
    return _unary(x, lambda v: np.maximum(v, 0.0), lambda xv, out: lambda g: g * (xv > 0.0))


def gelu(x):
    """Exact GELU: x * Phi(x) with the standard normal CDF (erf form)."""

    def vjp(xv, out):
        phi = _INV_SQRT_2PI * np.exp(-0.5 * xv * xv)
        local = _norm_cdf(xv) + xv * phi
        return lambda g: g * local

    return _unary(x, lambda v: v * _norm_cdf(v), vjp)


def tanh(x):
    return _unary(x, np.tanh, lambda xv, out: lambda g: g * (1.0 - out * out))


def exp(x):
    return _unary(x, np.exp, lambda xv, out: lambda g: g * out)


# ---------------------------------------------------------------------------
# reductions and losses


def reduce_sum(x, axis=None):
    def vjp(xv, out):
        def backward(g):
            if axis is None:
                return np.broadcast_to(g, xv.shape).copy()
            return np.broadcast_to(np.expand_dims(g, axis), xv.shape).copy()

        return backward

    return _unary(x, lambda v: np.sum(v, axis=axis), vjp)


def reduce_mean(x, axis=None):
    def vjp(xv, out):
        count = xv.size if axis is None else xv.shape[axis]

        def backward(g):
            if axis is None:
                return np.broadcast_to(g / count, xv.shape).copy()
            return np.broadcast_to(np.expand_dims(g, axis) / count, xv.shape).copy()

        return backward

    return _unary(x, lambda v: np.mean(v, axis=axis), vjp)


def log_softmax(x):
    """Row-wise log-softmax over the last axis."""

    def fwd(v):
        shifted = v - np.max(v, axis=-1, keepdims=True)
        return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))

    def vjp(xv, out):
        return lambda g: g - np.exp(out) * np.sum(g, axis=-1, keepdims=True)

    return _unary(x, fwd, vjp)


def gather_rows(x, index):
    """Pick one column per row: out[i] = x[i, index[i]]."""
    index = np.asarray(index, dtype=np.intp)

    def vjp(xv, out):
        def backward(g):
            full = np.zeros_like(xv)
            full[np.arange(xv.shape[0]), index] = g
            return full

        return backward

    return _unary(x, lambda v: v[np.arange(v.shape[0]), index], vjp)


def mean_square_error(a, b):
    def fwd(x, y):
        return np.mean((x - y) ** 2)

    def vjp_a(g, x, y):
        return _sum_to_shape(g * 2.0 * (x - y) / x.size, x.shape)

    def vjp_b(g, x, y):
        return _sum_to_shape(-g * 2.0 * (x - y) / x.size, y.shape)

    return _binary(a, b, fwd, vjp_a, vjp_b)


def clip(x, low: float, high: float):
    def vjp(xv, out):
        inside = (xv > low) & (xv < high)
        return lambda g: g * inside

    return _unary(x, lambda v: np.clip(v, low, high), vjp)


def minimum(a, b):
    def vjp_a(g, x, y):
        return _sum_to_shape(g * (x <= y), np.shape(x))

    def vjp_b(g, x, y):
        return _sum_to_shape(g * (y < x), np.shape(y))

    return _binary(a, b, np.minimum, vjp_a, vjp_b)


# ---------------------------------------------------------------------------
# shape plumbing


def reshape(x, shape):
    def vjp(xv, out):
        return lambda g: g.reshape(xv.shape)

    return _unary(x, lambda v: v.reshape(shape), vjp)


def swap_last_axes(x):
    return _unary(x, _swap, lambda xv, out: lambda g: _swap(g))


def pad_tail(x, count: int):
    """Zero-pad the last axis by ``count`` entries."""
    if count < 0:
        raise ValueError("pad count must be >= 0")

    def fwd(v):
        widths = [(0, 0)] * (v.ndim - 1) + [(0, count)]
        return np.pad(v, widths)

    def vjp(xv, out):
        n = xv.shape[-1]
        return lambda g: g[..., :n]

    return _unary(x, fwd, vjp)


def take_head(x, count: int):
    """Keep the first ``count`` entries of the last axis."""

    def vjp(xv, out):
        pad = xv.shape[-1] - count

        def backward(g):
            widths = [(0, 0)] * (g.ndim - 1) + [(0, pad)]
            return np.pad(g, widths)

        return backward

    return _unary(x, lambda v: v[..., :count], vjp)


def concat(parts, axis=-1):
    values = [_value(p) for p in parts]
    out = np.concatenate(values, axis=axis)
    if not any(_is_var(p) for p in parts):
        return out
    tape = _tape_of(*parts)
    parents = []
    offset = 0
    for p, v in zip(parts, values):
        width = v.shape[axis]
        if _is_var(p):
            sl = [slice(None)] * v.ndim
            sl[axis] = slice(offset, offset + width)
            parents.append((p, (lambda s: (lambda g: g[tuple(s)]))(tuple(sl))))
        offset += width
    return tape._record(out, parents)


# ---------------------------------------------------------------------------
# complex per-mode channel mixing (the learnable half of a spectral conv)


def mode_mix(r_re, r_im, v_re, v_im):
    """Complex mode-weight multiply: Y[..., j, m] = sum_p R[j, p, m] V[..., p, m].

    R is stored as separate real/imaginary tensors of shape (d_out, d_in, M);
    V likewise with shape (..., d_in, M). Returns the (real, imaginary)
    output pair. Gradients flow into all four operands.
    """
    rr, ri = _value(r_re), _value(r_im)
    vr, vi = _value(v_re), _value(v_im)

    yr = np.einsum("jpm,...pm->...jm", rr, vr) - np.einsum("jpm,...pm->...jm", ri, vi)
    yi = np.einsum("jpm,...pm->...jm", rr, vi) + np.einsum("jpm,...pm->...jm", ri, vr)
    if not any(_is_var(a) for a in (r_re, r_im, v_re, v_im)):
        return yr, yi

    tape = _tape_of(r_re, r_im, v_re, v_im)

    def parents_for(g_re_active: bool):
        # VJPs below receive the cotangent of one output; build each output
        # node with its own parent set so contributions accumulate correctly.
        def d_rr(g):
            src = vr if g_re_active else vi
            return np.einsum("...jm,...pm->jpm", g, src)

        def d_ri(g):
            src = vi if g_re_active else vr
            sign = -1.0 if g_re_active else 1.0
            return sign * np.einsum("...jm,...pm->jpm", g, src)

        def d_vr(g):
            src = rr if g_re_active else ri
            return np.einsum("jpm,...jm->...pm", src, g)

        def d_vi(g):
            src = ri if g_re_active else rr
            sign = -1.0 if g_re_active else 1.0
            return sign * np.einsum("jpm,...jm->...pm", src, g)

        parents = []
        if _is_var(r_re):
            parents.append((r_re, d_rr))
        if _is_var(r_im):
            parents.append((r_im, d_ri))
        if _is_var(v_re):
            parents.append((v_re, d_vr))
        if _is_var(v_im):
            parents.append((v_im, d_vi))
        return parents

    out_re = tape._record(yr, parents_for(True))
    out_im = tape._record(yi, parents_for(False))
    return out_re, out_im
