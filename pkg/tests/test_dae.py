"""Denoising autoencoder: corruption statistics, shape contracts, training trend."""

import numpy as np
import pytest

from maintlab.dae import DaeConfig, DaeParams, corrupt, decode, encode, load_dae, save_dae, train_dae
from maintlab.dae import reconstruction_loss
from maintlab.numerics import RngStream, Tape, grad_check
from maintlab.plantsim import FleetConfig, generate_dataset

CFG = DaeConfig()


@pytest.fixture(scope="module")
def small_training():
    ds = generate_dataset(FleetConfig(seed=1, n_devices=10, n_steps=400))
    cfg = DaeConfig(seed=1, epochs=50, batch_size=512)
    params, history = train_dae(ds.sensors, cfg)
    return ds, cfg, params, history


def test_corrupt_zero_sigma_is_identity():
    x = np.linspace(-1, 1, 5)
    np.testing.assert_array_equal(corrupt(x, 0.0, RngStream(0, "c")), x)


def test_corrupt_noise_statistics():
    rng = RngStream(1, "c")
    x = np.zeros((100_000, 5))
    noise = corrupt(x, 0.3, rng) - x
    np.testing.assert_allclose(noise.std(axis=0), 0.3, rtol=0.02)
    assert np.all(np.abs(noise.mean(axis=0)) < 3 * 0.3 / np.sqrt(100_000))


def test_encode_shape_and_determinism():
    params = DaeParams(CFG, RngStream(2, "init"))
    x = RngStream(3, "x").normal(size=5)
    z1, z2 = encode(x, params), encode(x, params)
    assert z1.shape == (CFG.latent_dim,)
    np.testing.assert_array_equal(z1, z2)


def test_encode_zero_weights_zero_input_gives_zero_latent():
    params = DaeParams(CFG, RngStream(4, "init"))
    for p in params.parameters():
        p.value = np.zeros_like(p.value)
    np.testing.assert_array_equal(encode(np.zeros(5), params), np.zeros(CFG.latent_dim))


def test_encode_dimension_mismatch_rejected():
    params = DaeParams(CFG, RngStream(5, "init"))
    with pytest.raises(ValueError):
        encode(np.zeros(7), params)
    with pytest.raises(ValueError):
        decode(np.zeros(7), params)


def test_decode_round_shape():
    params = DaeParams(CFG, RngStream(6, "init"))
    x = RngStream(7, "x").normal(size=(11, 5))
    assert decode(encode(x, params), params).shape == x.shape


def test_perfect_reconstruction_has_zero_loss():
    x = RngStream(8, "x").normal(size=(4, 5))
    assert float(np.mean((x - x) ** 2)) == 0.0


def test_train_rejects_empty_dataset():
    with pytest.raises(ValueError):
        train_dae(np.zeros((0, 5)), CFG)


def test_training_reconstructs_constant_data():
    data = np.tile([1.0, 2.0, 3.0, 4.0, 5.0], (512, 1))
    cfg = DaeConfig(seed=9, epochs=60, batch_size=128, noise_sigma=0.1)
    params, history = train_dae(data, cfg)
    z = params.normalize(data)
    mse = float(np.mean((decode(encode(z, params), params) - z) ** 2))
    assert mse < 1e-3


def test_history_length_and_denoising_trend(small_training):
    _, cfg, _, history = small_training
    assert len(history) == cfg.epochs
    assert history[49] <= history[9] / 5.0
    for e in range(len(history) - 10):
        assert history[e + 10] <= history[e] + 1e-9


def test_reconstruction_loss_gradients(small_training):
    ds, cfg, params, _ = small_training
    clean = params.normalize(ds.sensors[:16])
    noisy = corrupt(clean, cfg.noise_sigma, RngStream(10, "n"))

    def loss():
        tape = Tape()
        return tape, reconstruction_loss(clean, noisy, params, tape)

    assert grad_check(loss, params.parameters()) < 1e-4


def test_encoder_is_pure_after_training(small_training):
    ds, _, params, _ = small_training
    x = params.normalize(ds.sensors[:32])
    before = [p.value.copy() for p in params.parameters()]
    for _ in range(3):
        encode(x, params)
    for p, b in zip(params.parameters(), before):
        np.testing.assert_array_equal(p.value, b)


def test_encoder_lipschitz_sane(small_training):
    ds, _, params, _ = small_training
    rng = RngStream(11, "lip")
    x = params.normalize(ds.sensors[:64])
    base = encode(x, params)
    for _ in range(5):
        delta = rng.normal(0, 1e-3, size=x.shape)
        moved = encode(x + delta, params)
        num = np.linalg.norm(moved - base, axis=1)
        den = np.linalg.norm(delta, axis=1)
        assert np.all(num <= 100.0 * den)


def test_dae_serialization_roundtrip(tmp_path, small_training):
    _, cfg, params, _ = small_training
    path = tmp_path / "dae.bin"
    stats = tmp_path / "dae_norm.txt"
    save_dae(params, path, stats)
    back = load_dae(path, cfg)
    x = RngStream(12, "x").normal(size=(8, 5))
    np.testing.assert_array_equal(encode(params.normalize(x), params), encode(back.normalize(x), back))
    assert stats.read_text().startswith("norm_mean")
