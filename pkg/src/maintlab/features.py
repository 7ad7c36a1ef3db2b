"""Per-device hybrid features: DFT spectral amplitudes + deep temporal branch.

Two parallel paths summarize a trailing L-step sensor window:

* the spectral branch takes one-sided DFT magnitudes of each raw sensor
  channel, keeps the first ``n_amplitudes`` bins per channel (zero-padded
  when the window is short), and sanitizes non-finite values to 0.0;
* the deep temporal branch lifts the window's denoised latents to a wide
  channel space, runs stacked spectral-convolution layers (learnable
  complex weights on retained low-frequency modes plus a local per-step
  linear path, fused through GELU), flattens, and projects through ReLU.

The two vectors are concatenated, optionally through a final projection,
into the hybrid feature consumed by the device graph.

Forward code is written against the dispatching numerics ops, so the same
functions run plain (batched inference) or on a gradient tape (training
and finite-difference verification).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import autodiff as ad
from .numerics.fft import rfft, spectrum_length
from .numerics.optim import Parameter
from .numerics.rng import RngStream
from .serialize import load_arrays, save_arrays

__all__ = [
    "SpectralConfig",
    "FnoConfig",
    "FnoParams",
    "HybridFeature",
    "spectral_branch",
    "lift",
    "spectral_conv",
    "fno_layer",
    "fno_branch",
    "fuse",
    "hybrid_dim",
    "save_fno",
    "load_fno",
]


@dataclass(frozen=True)
class SpectralConfig:
    n_amplitudes: int = 10

    def __post_init__(self):
        if self.n_amplitudes < 1:
            raise ValueError("n_amplitudes must be >= 1")


@dataclass(frozen=True)
class FnoConfig:
    window: int = 8
    width: int = 36
    modes: int = 64
    layers: int = 3
    padding: int = 2
    branch_dim: int = 32
    fused_dim: int | None = None  # optional projection applied after concatenation
    seed: int = 0

    def __post_init__(self):
        for name in ("window", "width", "modes", "layers", "branch_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.padding < 0:
            raise ValueError("padding must be >= 0")

    @property
    def padded_length(self) -> int:
        return self.window + self.padding

    @property
    def effective_modes(self) -> int:
        """Retained modes, clamped to the one-sided spectrum length."""
        return min(self.modes, spectrum_length(self.padded_length))


class FnoParams:
    """Lifting, per-layer complex mode weights and local mixes, projection."""

    def __init__(self, cfg: FnoConfig, input_dim: int, rng: RngStream,
                 spectral_dim: int | None = None):
        d_w, k = cfg.width, cfg.effective_modes
        self.cfg = cfg
        self.input_dim = input_dim

        def uniform(shape, fan_in, name):
            bound = 1.0 / np.sqrt(fan_in)
            return Parameter(rng.uniform(-bound, bound, size=shape), name)

        self.lift_w = uniform((input_dim, d_w), input_dim, "lift_w")
        self.lift_b = Parameter(np.zeros(d_w), "lift_b")
        self.layer_r_re = []
        self.layer_r_im = []
        self.layer_local = []
        sigma = 1.0 / d_w
        for l in range(cfg.layers):
            self.layer_r_re.append(Parameter(rng.normal(0.0, sigma, size=(d_w, d_w, k)), f"r_re_{l}"))
            self.layer_r_im.append(Parameter(rng.normal(0.0, sigma, size=(d_w, d_w, k)), f"r_im_{l}"))
            self.layer_local.append(uniform((d_w, d_w), d_w, f"local_{l}"))
        flat = d_w * cfg.padded_length
        self.proj_w = uniform((flat, cfg.branch_dim), flat, "proj_w")
        self.proj_b = Parameter(np.zeros(cfg.branch_dim), "proj_b")
        self.fuse_w = None
        self.fuse_b = None
        if cfg.fused_dim is not None:
            if spectral_dim is None:
                raise ValueError("fused projection requires the spectral dim")
            concat = spectral_dim + cfg.branch_dim
            self.fuse_w = uniform((concat, cfg.fused_dim), concat, "fuse_w")
            self.fuse_b = Parameter(np.zeros(cfg.fused_dim), "fuse_b")

    def parameters(self):
        out = [self.lift_w, self.lift_b]
        for re_, im_, loc in zip(self.layer_r_re, self.layer_r_im, self.layer_local):
            out += [re_, im_, loc]
        out += [self.proj_w, self.proj_b]
        if self.fuse_w is not None:
            out += [self.fuse_w, self.fuse_b]
        return out

    def arrays(self):
        return {p.name: p.value for p in self.parameters()}

    @classmethod
    def from_arrays(cls, arrays, cfg: FnoConfig, input_dim: int, spectral_dim=None):
        params = cls(cfg, input_dim, RngStream(0, "fno-placeholder"), spectral_dim)
        for p in params.parameters():
            p.value = np.array(arrays[p.name])
        return params


@dataclass(frozen=True)
class HybridFeature:
    """Fused feature vector with its provenance."""

    vector: np.ndarray
    device_id: int
    time_step: int


def spectral_dim(spec_cfg: SpectralConfig, n_sensors: int) -> int:
    return n_sensors * spec_cfg.n_amplitudes


def hybrid_dim(spec_cfg: SpectralConfig, fno_cfg: FnoConfig, n_sensors: int) -> int:
    if fno_cfg.fused_dim is not None:
        return fno_cfg.fused_dim
    return spectral_dim(spec_cfg, n_sensors) + fno_cfg.branch_dim


# ---------------------------------------------------------------------------
# spectral branch


def spectral_branch(window, cfg: SpectralConfig) -> np.ndarray:
    """Magnitude spectrum features of a raw (..., L, S) sensor window.

    Per channel the one-sided DFT magnitudes are truncated or zero-padded
    to ``n_amplitudes`` and concatenated in sensor order. Any non-finite
    value (NaN-laced window, overflow) becomes 0.0, making the branch a
    total function.
    """
    window = np.asarray(window, dtype=np.float64)
    if window.ndim < 2:
        raise ValueError("window must have shape (..., L, S)")
    channels = np.swapaxes(window, -1, -2)  # (..., S, L)
    with np.errstate(invalid="ignore", over="ignore"):
        mags = np.abs(rfft(channels))  # (..., S, M)
    m = mags.shape[-1]
    keep = cfg.n_amplitudes
    if m >= keep:
        feats = mags[..., :keep]
    else:
        widths = [(0, 0)] * (mags.ndim - 1) + [(0, keep - m)]
        feats = np.pad(mags, widths)
    feats = np.nan_to_num(feats, nan=0.0, posinf=0.0, neginf=0.0)
    return feats.reshape(*window.shape[:-2], -1)


# ---------------------------------------------------------------------------
# deep temporal branch

_dft_real_cache: dict[int, tuple] = {}


def _dft_real_matrices(n: int):
    """Real-arithmetic forward/inverse one-sided DFT factor matrices.

    Forward: V_re = v @ C_f, V_im = v @ S_f reproduce the one-sided DFT.
    Inverse: y = Y_re @ C_i + Y_im @ S_i reproduces the real inverse
    transform (interior modes doubled by Hermitian symmetry; imaginary
    parts of DC and Nyquist are ignored, matching the usual convention).
    """
    cached = _dft_real_cache.get(n)
    if cached is None:
        m = spectrum_length(n)
        t = np.arange(n)[:, None]
        k = np.arange(m)[None, :]
        ang = 2.0 * np.pi * t * k / n
        c_f = np.cos(ang)
        s_f = -np.sin(ang)
        weights = np.full(m, 2.0)
        weights[0] = 1.0
        if n % 2 == 0:
            weights[-1] = 1.0
        c_i = (weights[:, None] / n) * np.cos(ang.T)
        s_i = -(weights[:, None] / n) * np.sin(ang.T)
        cached = (c_f, s_f, c_i, s_i)
        _dft_real_cache[n] = cached
    return cached


def lift(z_seq, params: FnoParams):
    """Apply the per-step affine lifting map to a (..., L, d_in) sequence."""
    val = z_seq.value if isinstance(z_seq, ad.Var) else np.asarray(z_seq, dtype=np.float64)
    if val.shape[-1] != params.input_dim:
        raise ValueError(f"expected {params.input_dim} input channels, got {val.shape[-1]}")
    return ad.add(ad.matmul(z_seq, _wv(params.lift_w, z_seq)), _wv(params.lift_b, z_seq))


def spectral_conv(v, r_re, r_im, n_modes: int):
    """Frequency-domain channel mixing of a (..., d_w, L') block.

    Transforms each channel, linearly combines the first ``n_modes``
    coefficients across channels with complex weights, zeroes the rest,
    and transforms back.
    """
    length = (v.value if isinstance(v, ad.Var) else np.asarray(v)).shape[-1]
    m = spectrum_length(length)
    if n_modes > m:
        raise ValueError(f"n_modes {n_modes} exceeds spectrum length {m}")
    c_f, s_f, c_i, s_i = _dft_real_matrices(length)
    v_re = ad.take_head(ad.matmul(v, c_f), n_modes)
    v_im = ad.take_head(ad.matmul(v, s_f), n_modes)
    y_re, y_im = ad.mode_mix(r_re, r_im, v_re, v_im)
    pad = m - n_modes
    y_re = ad.pad_tail(y_re, pad)
    y_im = ad.pad_tail(y_im, pad)
    return ad.add(ad.matmul(y_re, c_i), ad.matmul(y_im, s_i))


def fno_layer(v, r_re, r_im, w_local, n_modes: int):
    """GELU(spectral path + local per-step channel mix)."""
    spectral = spectral_conv(v, r_re, r_im, n_modes)
    local = ad.matmul(w_local, v)
    return ad.gelu(ad.add(spectral, local))


def fno_branch(z_seq, params: FnoParams, cfg: FnoConfig):
    """Latent window (..., L, d_in) -> branch feature vector (..., branch_dim)."""
    val = z_seq.value if isinstance(z_seq, ad.Var) else np.asarray(z_seq, dtype=np.float64)
    if val.shape[-2] != cfg.window:
        raise ValueError(f"expected window length {cfg.window}, got {val.shape[-2]}")
    k = cfg.effective_modes
    v = ad.swap_last_axes(lift(z_seq, params))  # (..., d_w, L)
    v = ad.pad_tail(v, cfg.padding)
    for r_re, r_im, loc in zip(params.layer_r_re, params.layer_r_im, params.layer_local):
        v = fno_layer(v, _wv(r_re, v), _wv(r_im, v), _wv(loc, v), k)
    vv = v.value if isinstance(v, ad.Var) else v
    flat_shape = vv.shape[:-2] + (vv.shape[-2] * vv.shape[-1],)
    flat = ad.reshape(v, flat_shape)
    return ad.relu(ad.add(ad.matmul(flat, _wv(params.proj_w, flat)), _wv(params.proj_b, flat)))


def fuse(f_spectral, f_fno, params: FnoParams):
    """Concatenate branch features; optionally project through ReLU."""
    combined = ad.concat([f_spectral, f_fno], axis=-1)
    if params.fuse_w is None:
        return combined
    return ad.relu(ad.add(ad.matmul(combined, _wv(params.fuse_w, combined)),
                          _wv(params.fuse_b, combined)))


def _wv(param, like):
    if isinstance(like, ad.Var):
        return like.tape.watch(param)
    if isinstance(param, Parameter):
        return param.value
    return param


def hybrid_features(windows, latents, spec_cfg: SpectralConfig, fno_params: FnoParams,
                    fno_cfg: FnoConfig):
    """Batched raw windows (..., L, S) + latent windows (..., L, d) -> features."""
    f_sp = spectral_branch(windows, spec_cfg)
    f_fno = fno_branch(latents, fno_params, fno_cfg)
    return fuse(f_sp, f_fno, fno_params)


def save_fno(params: FnoParams, path) -> None:
    save_arrays(path, params.arrays())


def load_fno(path, cfg: FnoConfig, input_dim: int, spectral_dim=None) -> FnoParams:
    return FnoParams.from_arrays(load_arrays(path), cfg, input_dim, spectral_dim)
