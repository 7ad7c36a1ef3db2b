"""Denoising autoencoder over per-time-step sensor vectors.

Gaussian corruption is applied to z-score-normalized sensor readings; a
symmetric fully connected encoder/decoder is trained to reconstruct the
clean vector, and the frozen encoder then supplies noise-robust latents to
the temporal feature branch. The latent dimension stays below the sensor
count by default so the bottleneck actually compresses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import autodiff as ad
from .numerics.optim import Parameter, adam_step
from .numerics.rng import RngStream
from .serialize import load_arrays, read_kv_text, save_arrays, write_kv_text

__all__ = ["DaeConfig", "DaeParams", "corrupt", "encode", "decode", "train_dae",
           "save_dae", "load_dae"]


@dataclass(frozen=True)
class DaeConfig:
    input_dim: int = 5
    latent_dim: int = 3
    hidden_dim: int = 24
    noise_sigma: float = 0.3
    learning_rate: float = 0.001
    epochs: int = 50
    batch_size: int = 16384
    init_scale: float = 0.1  # multiplier on uniform fan-in init; small start paces convergence
    seed: int = 0

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


class DaeParams:
    """Encoder/decoder weights plus the normalization statistics they assume.

    Decoder layer shapes mirror the encoder's in reverse, so the network is
    symmetric around the latent bottleneck.
    """

    def __init__(self, cfg: DaeConfig, rng: RngStream):
        def init(shape, fan_in, name):
            bound = cfg.init_scale / np.sqrt(fan_in)
            return Parameter(rng.uniform(-bound, bound, size=shape), name)

        d_in, d_h, d_z = cfg.input_dim, cfg.hidden_dim, cfg.latent_dim
        self.enc_w1 = init((d_in, d_h), d_in, "enc_w1")
        self.enc_b1 = Parameter(np.zeros(d_h), "enc_b1")
        self.enc_w2 = init((d_h, d_z), d_h, "enc_w2")
        self.enc_b2 = Parameter(np.zeros(d_z), "enc_b2")
        self.dec_w1 = init((d_z, d_h), d_z, "dec_w1")
        self.dec_b1 = Parameter(np.zeros(d_h), "dec_b1")
        self.dec_w2 = init((d_h, d_in), d_h, "dec_w2")
        self.dec_b2 = Parameter(np.zeros(d_in), "dec_b2")
        self.norm_mean = np.zeros(d_in)
        self.norm_std = np.ones(d_in)
        self.input_dim = d_in
        self.latent_dim = d_z

    def parameters(self):
        return [self.enc_w1, self.enc_b1, self.enc_w2, self.enc_b2,
                self.dec_w1, self.dec_b1, self.dec_w2, self.dec_b2]

    def normalize(self, x):
        return (np.asarray(x, dtype=np.float64) - self.norm_mean) / self.norm_std

    def arrays(self):
        out = {p.name: p.value for p in self.parameters()}
        out["norm_mean"] = self.norm_mean
        out["norm_std"] = self.norm_std
        return out

    @classmethod
    def from_arrays(cls, arrays, cfg: DaeConfig):
        params = cls(cfg, RngStream(0, "dae-placeholder"))
        for p in params.parameters():
            p.value = np.array(arrays[p.name])
        params.norm_mean = np.array(arrays["norm_mean"])
        params.norm_std = np.array(arrays["norm_std"])
        return params


def corrupt(x, sigma: float, rng: RngStream):
    """Additive isotropic Gaussian corruption."""
    x = np.asarray(x, dtype=np.float64)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0.0:
        return x.copy()
    return x + rng.normal(0.0, sigma, size=x.shape)


def encode(x, params: DaeParams):
    """Normalized sensor vector(s) -> latent vector(s) of length latent_dim."""
    xv = x.value if isinstance(x, ad.Var) else np.asarray(x, dtype=np.float64)
    if xv.shape[-1] != params.input_dim:
        raise ValueError(f"expected input dim {params.input_dim}, got {xv.shape[-1]}")
    h = ad.relu(ad.add(ad.matmul(x, _wv(params.enc_w1, x)), _wv(params.enc_b1, x)))
    return ad.add(ad.matmul(h, _wv(params.enc_w2, h)), _wv(params.enc_b2, h))


def decode(z, params: DaeParams):
    """Latent vector(s) -> reconstruction with the input dimension."""
    zv = z.value if isinstance(z, ad.Var) else np.asarray(z, dtype=np.float64)
    if zv.shape[-1] != params.latent_dim:
        raise ValueError(f"expected latent dim {params.latent_dim}, got {zv.shape[-1]}")
    h = ad.relu(ad.add(ad.matmul(z, _wv(params.dec_w1, z)), _wv(params.dec_b1, z)))
    return ad.add(ad.matmul(h, _wv(params.dec_w2, h)), _wv(params.dec_b2, h))


def _wv(param, like):
    """Plain value for array inputs, watched tape leaf for Var inputs."""
    return like.tape.watch(param) if isinstance(like, ad.Var) else param.value


def reconstruction_loss(clean_batch, noisy_batch, params: DaeParams, tape: ad.Tape):
    """Mean squared reconstruction error of the denoising pass, on a tape."""
    x = tape.constant(noisy_batch)
    return ad.mean_square_error(decode(encode(x, params), params), clean_batch)


def train_dae(data, cfg: DaeConfig):
    """Train on raw sensor rows; returns (params, per-epoch denoising MSE).

    Normalization statistics are estimated from the training data and
    stored on the returned params. The history entry for an epoch is the
    mean minibatch denoising loss observed during that epoch.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("training data must be a non-empty (rows, sensors) array")
    rng = RngStream(cfg.seed, "dae")
    params = DaeParams(cfg, rng.spawn("init"))
    params.norm_mean = data.mean(axis=0)
    std = data.std(axis=0)
    params.norm_std = np.where(std > 1e-12, std, 1.0)
    normalized = params.normalize(data)

    noise_rng = rng.spawn("noise")
    shuffle_rng = rng.spawn("shuffle")
    n = normalized.shape[0]
    batch = min(cfg.batch_size, n)
    history = np.zeros(cfg.epochs)
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        losses = []
        for start in range(0, n, batch):
            clean = normalized[order[start : start + batch]]
            noisy = corrupt(clean, cfg.noise_sigma, noise_rng)
            tape = ad.Tape()
            loss = reconstruction_loss(clean, noisy, params, tape)
            losses.append(float(loss.value))
            tape.backward(loss)
            adam_step(params.parameters(), lr=cfg.learning_rate)
        history[epoch] = float(np.mean(losses))
    return params, history


def save_dae(params: DaeParams, path, stats_path=None) -> None:
    save_arrays(path, params.arrays())
    if stats_path is not None:
        write_kv_text(stats_path, {"norm_mean": params.norm_mean, "norm_std": params.norm_std})


def load_dae(path, cfg: DaeConfig) -> DaeParams:
    return DaeParams.from_arrays(load_arrays(path), cfg)
