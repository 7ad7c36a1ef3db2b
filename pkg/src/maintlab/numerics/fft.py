"""Real FFT pair for short sensor windows.

Forward transform convention (no normalization)::

    X[k] = sum_n x[n] * exp(-2j*pi*k*n/L),   k = 0..floor(L/2)

Only the one-sided half spectrum is stored; the remaining coefficients are
implied by Hermitian symmetry of real input. Power-of-two lengths run
through an iterative radix-2 butterfly; other lengths fall back to the
direct O(L^2) summation, which is perfectly adequate for the window sizes
used here (L <= a few thousand).

All functions accept arrays with arbitrary leading dimensions and
transform along the last axis.
"""

from __future__ import annotations

import numpy as np

__all__ = ["rfft", "irfft", "spectrum_length", "validate_spectrum"]

_bitrev_cache: dict[int, np.ndarray] = {}
_dft_cache: dict[int, np.ndarray] = {}


def spectrum_length(n: int) -> int:
    """Number of one-sided coefficients for a length-n real signal."""
    return n // 2 + 1


def _bit_reversal(n: int) -> np.ndarray:
    rev = _bitrev_cache.get(n)
    if rev is None:
        rev = np.zeros(n, dtype=np.intp)
        j = 0
        for i in range(1, n):
            bit = n >> 1
            while j & bit:
                j ^= bit
                bit >>= 1
            j |= bit
            rev[i] = j
        _bitrev_cache[n] = rev
    return rev


def _fft_radix2(a: np.ndarray) -> np.ndarray:
    """In-order iterative Cooley-Tukey FFT over the last axis (n = 2^k)."""
    n = a.shape[-1]
    out = a[..., _bit_reversal(n)]
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = out.reshape(*out.shape[:-1], n // size, size)
        even = blocks[..., :half]
        odd = blocks[..., half:] * twiddle
        out = np.concatenate([even + odd, even - odd], axis=-1).reshape(*a.shape[:-1], n)
        size *= 2
    return out


def _dft_matrix(n: int) -> np.ndarray:
    mat = _dft_cache.get(n)
    if mat is None:
        k = np.arange(n)[:, None]
        t = np.arange(n)[None, :]
        mat = np.exp(-2j * np.pi * k * t / n)
        _dft_cache[n] = mat
    return mat


def _fft(a: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    if n & (n - 1) == 0:
        return _fft_radix2(a)
    return a @ _dft_matrix(n).T  # direct summation fallback


def rfft(x) -> np.ndarray:
    """One-sided DFT of a real signal along the last axis.

    Raises ValueError on empty or non-finite-free input contracts being
    violated (empty input only; non-finite values propagate, callers that
    need sanitization do it on the magnitudes).
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if n < 1:
        raise ValueError("rfft requires a signal of length >= 1")
    return _fft(x.astype(np.complex128))[..., : spectrum_length(n)]


def validate_spectrum(coeffs: np.ndarray, n: int, tol: float = 1e-12) -> None:
    """Check a one-sided spectrum is consistent with real length-n input."""
    coeffs = np.asarray(coeffs)
    m = spectrum_length(n)
    if coeffs.shape[-1] != m:
        raise ValueError(
            f"spectrum has {coeffs.shape[-1]} coefficients, expected {m} for length {n}"
        )
    if abs(float(np.max(np.abs(coeffs[..., 0].imag), initial=0.0))) > tol:
        raise ValueError("DC coefficient of a real signal must have zero imaginary part")
    if n % 2 == 0 and abs(float(np.max(np.abs(coeffs[..., -1].imag), initial=0.0))) > tol:
        raise ValueError("Nyquist coefficient of an even-length real signal must be real")


def irfft(coeffs, n: int) -> np.ndarray:
    """Exact inverse of :func:`rfft` for a length-n real signal.

    The implied negative-frequency half is reconstructed by conjugate
    symmetry before inverting, so irfft(rfft(x), len(x)) == x to roundoff.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    m = spectrum_length(n)
    if coeffs.shape[-1] != m:
        raise ValueError(
            f"spectrum length {coeffs.shape[-1]} inconsistent with signal length {n} "
            f"(expected {m})"
        )
    full = np.empty(coeffs.shape[:-1] + (n,), dtype=np.complex128)
    full[..., :m] = coeffs
    if n > 1:
        tail = coeffs[..., 1 : (n + 1) // 2]
        full[..., m:] = np.conj(tail[..., ::-1])
    # ifft(X) = conj(fft(conj(X))) / n
    return (np.conj(_fft(np.conj(full))) / n).real
