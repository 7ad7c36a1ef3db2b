"""Oracle tests for the FFT pair, gradient tape, Adam, and grad checker."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maintlab.numerics import (
    Parameter,
    ParameterStateError,
    RngStream,
    Tape,
    TapeStateError,
    adam_step,
    gelu,
    grad_check,
    irfft,
    log_softmax,
    matmul,
    mean_square_error,
    mode_mix,
    pad_tail,
    reduce_mean,
    reduce_sum,
    relu,
    rfft,
    spectrum_length,
    validate_spectrum,
)
from maintlab.numerics import autodiff as ad


# --------------------------------------------------------------------------
# independent oracles

def dft_direct(x):
    """O(L^2) direct summation of the one-sided forward transform."""
    x = np.asarray(x, dtype=np.float64)
    L = x.shape[-1]
    k = np.arange(L // 2 + 1)[:, None]
    n = np.arange(L)[None, :]
    return (x * np.exp(-2j * np.pi * k * n / L)).sum(axis=-1)


def idft_direct(coeffs, n):
    """Direct inverse summation over the Hermitian-expanded spectrum."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    full = np.zeros(n, dtype=np.complex128)
    m = n // 2 + 1
    full[:m] = coeffs
    if n > 1:
        full[m:] = np.conj(coeffs[1 : (n + 1) // 2][::-1])
    t = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    return ((full * np.exp(2j * np.pi * t * k / n)).sum(axis=-1) / n).real


# --------------------------------------------------------------------------
# rfft / irfft


def test_rfft_constant_signal_is_dc_only():
    np.testing.assert_allclose(rfft([1.0, 1.0, 1.0, 1.0]), [4 + 0j, 0 + 0j, 0 + 0j], atol=1e-14)


def test_rfft_unit_impulse_is_flat():
    np.testing.assert_allclose(rfft([1.0, 0.0, 0.0, 0.0]), [1 + 0j, 1 + 0j, 1 + 0j], atol=1e-14)


def test_rfft_matches_direct_summation_length8():
    x = RngStream(7, "fft-test").normal(size=8)
    np.testing.assert_allclose(rfft(x), dft_direct(x), atol=1e-12)


@pytest.mark.parametrize("length", [2, 4, 8, 16, 32])
def test_rfft_oracle_and_roundtrip_sweep(length):
    rng = RngStream(11, f"fft-sweep-{length}")
    for _ in range(100):
        x = rng.normal(size=length)
        spec = rfft(x)
        np.testing.assert_allclose(spec, dft_direct(x), atol=1e-12)
        np.testing.assert_allclose(irfft(spec, length), x, atol=1e-12)


@pytest.mark.parametrize("length", [3, 5, 6, 7, 12])
def test_rfft_non_power_of_two_fallback(length):
    rng = RngStream(13, f"fft-odd-{length}")
    x = rng.normal(size=length)
    np.testing.assert_allclose(rfft(x), dft_direct(x), atol=1e-12)
    np.testing.assert_allclose(irfft(rfft(x), length), x, atol=1e-12)


def test_irfft_dc_reconstruction():
    c = 2.5
    np.testing.assert_allclose(irfft([4 * c, 0, 0], 4), [c, c, c, c], atol=1e-14)


def test_irfft_matches_direct_inverse_on_random_spectrum():
    rng = RngStream(3, "ifft-oracle")
    n = 8
    coeffs = rng.normal(size=n // 2 + 1) + 1j * rng.normal(size=n // 2 + 1)
    coeffs[0] = coeffs[0].real  # valid one-sided spectrum of a real signal
    coeffs[-1] = coeffs[-1].real
    np.testing.assert_allclose(irfft(coeffs, n), idft_direct(coeffs, n), atol=1e-12)


def test_rfft_empty_input_rejected():
    with pytest.raises(ValueError):
        rfft([])


def test_irfft_inconsistent_length_rejected():
    with pytest.raises(ValueError):
        irfft([1 + 0j, 0j, 0j], 8)


def test_validate_spectrum_flags_bad_dc():
    with pytest.raises(ValueError):
        validate_spectrum(np.array([1 + 1j, 0j, 0j]), 4)
    validate_spectrum(rfft([0.3, -1.2, 0.5, 2.0]), 4)


def test_parseval_identity():
    rng = RngStream(5, "parseval")
    for length in (4, 8, 16, 32):
        x = rng.normal(size=length)
        spec = rfft(x)
        # Hermitian expansion: interior coefficients appear twice.
        weights = np.full(spectrum_length(length), 2.0)
        weights[0] = 1.0
        if length % 2 == 0:
            weights[-1] = 1.0
        lhs = np.sum(x**2)
        rhs = np.sum(weights * np.abs(spec) ** 2) / length
        assert abs(lhs - rhs) / abs(lhs) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=2, max_size=32))
def test_roundtrip_property(data):
    x = np.asarray(data)
    np.testing.assert_allclose(irfft(rfft(x), len(x)), x, atol=1e-9)


# --------------------------------------------------------------------------
# gelu


def test_gelu_zero():
    assert gelu(np.array(0.0)) == 0.0


def test_gelu_large_input_asymptote():
    assert abs(float(gelu(np.array(10.0))) - 10.0) < 1e-6


def test_gelu_at_one_matches_high_precision_cdf():
    import mpmath

    expected = float(mpmath.mpf(1) * (mpmath.mpf(1) + mpmath.erf(mpmath.mpf(1) / mpmath.sqrt(2))) / 2)
    assert abs(float(gelu(np.array(1.0))) - expected) < 1e-12
    assert abs(float(gelu(np.array(1.0))) - 0.841345) < 1e-5


# --------------------------------------------------------------------------
# tape


def test_backward_square_gives_exact_gradient():
    w = Parameter(3.0, "w")
    tape = Tape()
    wv = tape.watch(w)
    tape.backward(wv * wv)
    assert w.gradient == pytest.approx(6.0, abs=0.0)


def test_backward_twice_is_state_error():
    w = Parameter(2.0, "w")
    tape = Tape()
    y = tape.watch(w) * 2.0
    tape.backward(y)
    with pytest.raises(TapeStateError):
        tape.backward(y)


def test_backward_without_forward_is_state_error():
    with pytest.raises(TapeStateError):
        Tape().backward(None)


def test_backward_requires_scalar():
    w = Parameter(np.ones(3), "w")
    tape = Tape()
    y = tape.watch(w) * 2.0
    with pytest.raises(ValueError):
        tape.backward(y)


def test_cross_tape_operands_rejected():
    a = Tape().watch(Parameter(1.0))
    b = Tape().watch(Parameter(1.0))
    with pytest.raises(ValueError):
        _ = a + b


def test_matmul_gradients_against_finite_differences():
    rng = RngStream(21, "matmul-fd")
    w = Parameter(rng.normal(size=(4, 3)), "w")
    x = rng.normal(size=(5, 4))

    def loss():
        tape = Tape()
        return tape, reduce_sum(relu(matmul(x, tape.watch(w))))

    assert grad_check(loss, [w]) < 1e-7


def test_mode_mix_gradient_matches_finite_differences():
    rng = RngStream(22, "modemix-fd")
    d, m = 3, 4
    r_re = Parameter(rng.normal(size=(d, d, m)), "r_re")
    r_im = Parameter(rng.normal(size=(d, d, m)), "r_im")
    v_re = rng.normal(size=(d, m))
    v_im = rng.normal(size=(d, m))

    def loss():
        tape = Tape()
        yr, yi = mode_mix(tape.watch(r_re), tape.watch(r_im), v_re, v_im)
        return tape, reduce_sum(yr * yr) + reduce_sum(yi * yi)

    assert grad_check(loss, [r_re, r_im]) < 1e-6


def test_log_softmax_and_gather_gradients():
    rng = RngStream(23, "lsm-fd")
    w = Parameter(rng.normal(size=(4, 4)), "w")
    x = rng.normal(size=(6, 4))
    idx = np.array([0, 1, 2, 3, 1, 2])

    def loss():
        tape = Tape()
        lp = log_softmax(matmul(x, tape.watch(w)))
        return tape, -reduce_mean(ad.gather_rows(lp, idx))

    assert grad_check(loss, [w]) < 1e-6


def test_pad_and_mse_gradients():
    rng = RngStream(24, "pad-fd")
    w = Parameter(rng.normal(size=(3, 5)), "w")
    target = rng.normal(size=(3, 7))

    def loss():
        tape = Tape()
        return tape, mean_square_error(pad_tail(tape.watch(w), 2), target)

    assert grad_check(loss, [w]) < 1e-7


def test_clip_minimum_dead_zone_gradient_is_zero():
    w = Parameter(np.array([2.0]), "w")
    tape = Tape()
    wv = tape.watch(w)
    clipped = ad.clip(wv, 0.8, 1.2)
    tape.backward(reduce_sum(ad.minimum(wv, clipped)))
    # min picks the clipped branch (1.2 < 2.0) whose gradient is dead.
    assert w.gradient == pytest.approx(0.0, abs=0.0)


# --------------------------------------------------------------------------
# grad_check harness itself


def test_grad_check_quadratic_is_tiny():
    w = Parameter(1.7, "w")

    def loss():
        tape = Tape()
        wv = tape.watch(w)
        return tape, wv * wv

    assert grad_check(loss, [w]) < 1e-8


# --------------------------------------------------------------------------
# adam


def test_adam_zero_gradient_leaves_value():
    p = Parameter(np.array([1.0, -2.0]), "p")
    p.gradient = np.zeros(2)
    adam_step([p], lr=0.1)
    np.testing.assert_array_equal(p.value, [1.0, -2.0])
    assert p.step_count == 1


def test_adam_first_step_bias_correction():
    p = Parameter(np.array([0.0]), "p")
    p.gradient = np.array([1.0])
    adam_step([p], lr=0.1)
    # m_hat = 1, v_hat = 1 -> delta = -0.1 / (1 + 1e-8)
    assert p.value[0] == pytest.approx(-0.1 * (1.0 / (1.0 + 1e-8)), rel=0, abs=1e-15)


def test_adam_identical_parameters_get_identical_updates():
    a = Parameter(np.array([0.5]), "a")
    b = Parameter(np.array([0.5]), "b")
    for p in (a, b):
        p.gradient = np.array([0.3])
    adam_step([a, b], lr=0.01)
    np.testing.assert_array_equal(a.value, b.value)


def test_adam_without_gradient_is_state_error():
    with pytest.raises(ParameterStateError):
        adam_step([Parameter(1.0, "p")], lr=0.1)


# --------------------------------------------------------------------------
# rng streams


def test_rng_streams_reproducible_and_independent():
    a = RngStream(42, "alpha").normal(size=5)
    b = RngStream(42, "alpha").normal(size=5)
    c = RngStream(42, "beta").normal(size=5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_rng_spawn_does_not_consume_parent():
    root = RngStream(1, "root")
    child = root.spawn("sub")
    first = root.normal()
    again = RngStream(1, "root").normal()
    assert first == again
    assert child.label == "root/sub"
