"""Spectral branch and deep temporal branch: oracles, shapes, gradients."""

import numpy as np
import pytest

from maintlab.features import (
    FnoConfig,
    FnoParams,
    SpectralConfig,
    fno_branch,
    fno_layer,
    fuse,
    hybrid_dim,
    lift,
    load_fno,
    save_fno,
    spectral_branch,
    spectral_conv,
)
from maintlab.numerics import Parameter, RngStream, Tape, grad_check, reduce_sum
from maintlab.numerics import autodiff as ad


def dft_magnitude_oracle(window, n_keep):
    """Direct O(L^2) magnitude summation, padded/truncated per channel."""
    window = np.asarray(window, dtype=np.float64)
    L, S = window.shape
    m = L // 2 + 1
    out = []
    for s in range(S):
        x = window[:, s]
        mags = []
        for k in range(m):
            acc = complex(0.0)
            for n in range(L):
                acc += x[n] * np.exp(-2j * np.pi * k * n / L)
            mags.append(abs(acc))
        mags = (mags + [0.0] * n_keep)[:n_keep]
        out.extend(mags)
    return np.asarray(out)


def lowpass_oracle(v, keep):
    """Ideal low-pass: DFT, zero modes >= keep, inverse DFT."""
    out = np.empty_like(v)
    n = v.shape[-1]
    for j in range(v.shape[0]):
        spec = np.fft.fft(v[j])
        full = np.zeros(n, dtype=complex)
        full[0] = spec[0]
        for k in range(1, keep):
            full[k] = spec[k]
            full[n - k] = spec[n - k]
        out[j] = np.fft.ifft(full).real
    return out


SPEC = SpectralConfig(n_amplitudes=5)


# --------------------------------------------------------------------------
# spectral branch


def test_constant_channel_is_dc_only():
    window = np.zeros((8, 2))
    window[:, 0] = 3.0
    feats = spectral_branch(window, SpectralConfig(n_amplitudes=5))
    np.testing.assert_allclose(feats[:5], [24.0, 0, 0, 0, 0], atol=1e-12)


def test_short_window_zero_padded():
    window = RngStream(0, "w").normal(size=(4, 1))
    feats = spectral_branch(window, SpectralConfig(n_amplitudes=5))
    assert feats.shape == (5,)
    np.testing.assert_array_equal(feats[3:], [0.0, 0.0])


def test_nan_window_sanitized():
    window = RngStream(1, "w").normal(size=(8, 3))
    window[2, 1] = np.nan
    feats = spectral_branch(window, SPEC)
    assert np.all(np.isfinite(feats))
    np.testing.assert_array_equal(feats[5:10], np.zeros(5))


def test_spectral_branch_matches_direct_oracle():
    rng = RngStream(2, "w")
    for L in (4, 8, 16, 32):
        for _ in range(25):
            window = rng.normal(size=(L, 5))
            got = spectral_branch(window, SpectralConfig(n_amplitudes=10))
            want = dft_magnitude_oracle(window, 10)
            np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-9)


def test_spectral_branch_batched_matches_single():
    rng = RngStream(3, "w")
    windows = rng.normal(size=(7, 8, 5))
    batched = spectral_branch(windows, SPEC)
    for i in range(7):
        np.testing.assert_array_equal(batched[i], spectral_branch(windows[i], SPEC))


# --------------------------------------------------------------------------
# lifting


def test_lift_identity_weights():
    cfg = FnoConfig(width=3)
    params = FnoParams(cfg, input_dim=3, rng=RngStream(4, "p"))
    params.lift_w.value = np.eye(3)
    params.lift_b.value = np.zeros(3)
    z = RngStream(5, "z").normal(size=(8, 3))
    np.testing.assert_allclose(lift(z, params), z, atol=1e-15)


def test_lift_zero_weights():
    cfg = FnoConfig()
    params = FnoParams(cfg, input_dim=3, rng=RngStream(6, "p"))
    params.lift_w.value[:] = 0.0
    z = RngStream(7, "z").normal(size=(8, 3))
    np.testing.assert_array_equal(lift(z, params), np.zeros((8, cfg.width)))


def test_lift_time_shift_equivariance():
    cfg = FnoConfig()
    params = FnoParams(cfg, input_dim=3, rng=RngStream(8, "p"))
    z = RngStream(9, "z").normal(size=(8, 3))
    shifted = np.roll(z, 2, axis=0)
    np.testing.assert_allclose(lift(shifted, params), np.roll(lift(z, params), 2, axis=0), atol=1e-12)


def test_lift_shape_mismatch_rejected():
    params = FnoParams(FnoConfig(), input_dim=3, rng=RngStream(10, "p"))
    with pytest.raises(ValueError):
        lift(np.zeros((8, 4)), params)


# --------------------------------------------------------------------------
# spectral convolution


def _identity_modes(d, k):
    r_re = np.zeros((d, d, k))
    for m in range(k):
        r_re[:, :, m] = np.eye(d)
    return r_re, np.zeros((d, d, k))


def test_identity_weights_on_bandlimited_input():
    d, n, keep = 4, 10, 3
    rng = RngStream(11, "v")
    # synthesize band-limited input from the first `keep` modes
    t = np.arange(n)
    v = np.zeros((d, n))
    for j in range(d):
        v[j] = rng.normal() * np.ones(n)
        for k in range(1, keep):
            v[j] += rng.normal() * np.cos(2 * np.pi * k * t / n) + rng.normal() * np.sin(
                2 * np.pi * k * t / n
            )
    r_re, r_im = _identity_modes(d, keep)
    np.testing.assert_allclose(spectral_conv(v, r_re, r_im, keep), v, atol=1e-9)


def test_identity_weights_equal_ideal_lowpass():
    d, n, keep = 5, 10, 4
    rng = RngStream(12, "v")
    r_re, r_im = _identity_modes(d, keep)
    for _ in range(20):
        v = rng.normal(size=(d, n))
        got = spectral_conv(v, r_re, r_im, keep)
        np.testing.assert_allclose(got, lowpass_oracle(v, keep), atol=1e-9)


def test_zero_weights_zero_output():
    v = RngStream(13, "v").normal(size=(3, 8))
    out = spectral_conv(v, np.zeros((3, 3, 4)), np.zeros((3, 3, 4)), 4)
    np.testing.assert_array_equal(out, np.zeros_like(v))


def test_mode_clamp_matches_direct_configuration():
    clamped = FnoConfig(window=8, padding=2, modes=64)
    direct = FnoConfig(window=8, padding=2, modes=6)
    assert clamped.effective_modes == 6
    p1 = FnoParams(clamped, input_dim=3, rng=RngStream(14, "p"))
    p2 = FnoParams(direct, input_dim=3, rng=RngStream(14, "p"))
    z = RngStream(15, "z").normal(size=(8, 3))
    np.testing.assert_array_equal(fno_branch(z, p1, clamped), fno_branch(z, p2, direct))


# --------------------------------------------------------------------------
# full layer / branch


def test_layer_zero_weights_gives_zero():
    d, n = 3, 8
    v = RngStream(16, "v").normal(size=(d, n))
    out = fno_layer(v, np.zeros((d, d, 4)), np.zeros((d, d, 4)), np.zeros((d, d)), 4)
    np.testing.assert_array_equal(out, np.zeros_like(v))


def test_layer_reduces_to_spectral_path_when_local_zero():
    d, n, k = 3, 8, 4
    rng = RngStream(17, "v")
    v = rng.normal(size=(d, n))
    r_re = rng.normal(size=(d, d, k))
    r_im = rng.normal(size=(d, d, k))
    got = fno_layer(v, r_re, r_im, np.zeros((d, d)), k)
    spec = spectral_conv(v, r_re, r_im, k)
    np.testing.assert_allclose(got, ad.gelu(spec), atol=1e-14)


def test_branch_output_shape_sign_determinism():
    cfg = FnoConfig()
    params = FnoParams(cfg, input_dim=3, rng=RngStream(18, "p"))
    z = RngStream(19, "z").normal(size=(6, 8, 3))
    out = fno_branch(z, params, cfg)
    assert out.shape == (6, cfg.branch_dim)
    assert np.all(out >= 0.0)
    np.testing.assert_array_equal(out, fno_branch(z, params, cfg))


def test_fuse_concatenates_verbatim():
    cfg = FnoConfig()
    params = FnoParams(cfg, input_dim=3, rng=RngStream(20, "p"))
    a, b = np.arange(4.0), np.arange(5.0) + 10
    fused = fuse(a, b, params)
    np.testing.assert_array_equal(fused, np.concatenate([a, b]))


def test_fused_projection_dim_and_sign():
    cfg = FnoConfig(fused_dim=64)
    params = FnoParams(cfg, input_dim=3, rng=RngStream(21, "p"), spectral_dim=50)
    f_sp = RngStream(22, "x").normal(size=50)
    f_fno = RngStream(23, "x").normal(size=cfg.branch_dim)
    out = fuse(f_sp, f_fno, params)
    assert out.shape == (64,)
    assert np.all(out >= 0.0)


def test_hybrid_dim_arithmetic():
    assert hybrid_dim(SpectralConfig(n_amplitudes=5), FnoConfig(branch_dim=32), 5) == 57
    assert hybrid_dim(SpectralConfig(), FnoConfig(fused_dim=64), 5) == 64


# --------------------------------------------------------------------------
# gradients


def test_fno_layer_gradcheck():
    d, n, k = 3, 6, 3
    rng = RngStream(24, "g")
    v = rng.normal(size=(d, n))
    r_re = Parameter(rng.normal(0, 0.3, size=(d, d, k)), "r_re")
    r_im = Parameter(rng.normal(0, 0.3, size=(d, d, k)), "r_im")
    loc = Parameter(rng.normal(0, 0.3, size=(d, d)), "loc")

    def loss():
        tape = Tape()
        out = fno_layer(tape.constant(v), tape.watch(r_re), tape.watch(r_im), tape.watch(loc), k)
        return tape, reduce_sum(out * out)

    assert grad_check(loss, [r_re, r_im, loc]) < 1e-4


def test_full_branch_and_fuse_gradcheck():
    cfg = FnoConfig(window=6, width=5, layers=2, padding=1, branch_dim=4, modes=3)
    params = FnoParams(cfg, input_dim=2, rng=RngStream(25, "p"))
    z = RngStream(26, "z").normal(size=(6, 2))
    f_sp = RngStream(27, "s").normal(size=5)

    def loss():
        tape = Tape()
        branch = fno_branch(tape.constant(z), params, cfg)
        fused = fuse(tape.constant(f_sp), branch, params)
        return tape, reduce_sum(fused * fused)

    assert grad_check(loss, params.parameters(), max_coords=8) < 1e-4


def test_tape_forward_equals_plain_forward():
    cfg = FnoConfig()
    params = FnoParams(cfg, input_dim=3, rng=RngStream(28, "p"))
    z = RngStream(29, "z").normal(size=(8, 3))
    plain = fno_branch(z, params, cfg)
    tape = Tape()
    taped = fno_branch(tape.constant(z), params, cfg)
    np.testing.assert_array_equal(plain, taped.value)


def test_fno_serialization_roundtrip(tmp_path):
    cfg = FnoConfig()
    params = FnoParams(cfg, input_dim=3, rng=RngStream(30, "p"))
    path = tmp_path / "fno.bin"
    save_fno(params, path)
    back = load_fno(path, cfg, input_dim=3)
    z = RngStream(31, "z").normal(size=(8, 3))
    np.testing.assert_array_equal(fno_branch(z, params, cfg), fno_branch(z, back, cfg))
