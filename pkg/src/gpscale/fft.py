"""Real-input discrete Fourier transforms with a fixed convention.

The forward transform is unnormalized,

    c[k] = sum_j exp(-2 pi i k j / n) x[j],

and the inverse carries the factor 1/n. Only non-negative frequencies of the
last axis are stored. Everything else in the package assumes this convention,
so the thin wrappers here validate their inputs and defer to :mod:`numpy.fft`.
"""

import numpy as np

from .exceptions import ValidationError

#: Maximum absolute imaginary part tolerated on self-conjugate coefficients.
IMAG_TOL = 1e-9


def _as_finite_real(x, ndim, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim != ndim:
        raise ValidationError(f"{name} must have {ndim} dimension(s), got shape {x.shape}")
    if x.size == 0:
        raise ValidationError(f"{name} must not be empty")
    if not np.all(np.isfinite(x)):
        raise ValidationError(f"{name} contains non-finite values")
    return x


def rfft(x):
    """Unnormalized forward transform of a real vector, length ``n // 2 + 1``."""
    x = _as_finite_real(x, 1)
    return np.fft.rfft(x)


def _check_self_conjugate(c, n, axis_label=""):
    # DC and, for even n, Nyquist must be real for a real signal.
    idx = [0] + ([n // 2] if n % 2 == 0 else [])
    imag = np.abs(np.imag(c[..., idx]))
    if np.any(imag > IMAG_TOL):
        raise ValidationError(
            f"imaginary part {imag.max():.3g} on a self-conjugate coefficient{axis_label} "
            f"exceeds {IMAG_TOL}"
        )


def irfft(c, n):
    """Inverse of :func:`rfft` returning a real vector of length ``n``."""
    n = int(n)
    c = np.asarray(c, dtype=complex)
    if n < 1:
        raise ValidationError(f"n must be positive, got {n}")
    if c.ndim != 1 or c.shape[0] != n // 2 + 1:
        raise ValidationError(f"expected {n // 2 + 1} coefficients for n={n}, got shape {c.shape}")
    _check_self_conjugate(c, n)
    return np.fft.irfft(c, n)


def rfft2(x):
    """Two-dimensional forward transform; the half spectrum is kept along the last axis.

    The result has shape ``(n1, n2 // 2 + 1)`` with all ``n1`` frequencies
    retained along the first axis.
    """
    x = _as_finite_real(x, 2)
    return np.fft.rfft2(x)


def irfft2(c, n1, n2):
    """Inverse of :func:`rfft2` returning a real ``(n1, n2)`` matrix."""
    n1, n2 = int(n1), int(n2)
    c = np.asarray(c, dtype=complex)
    if n1 < 1 or n2 < 1:
        raise ValidationError(f"shape must be positive, got ({n1}, {n2})")
    if c.shape != (n1, n2 // 2 + 1):
        raise ValidationError(f"expected shape {(n1, n2 // 2 + 1)}, got {c.shape}")
    # Self-conjugate columns must be Hermitian along the first axis.
    cols = [0] + ([n2 // 2] if n2 % 2 == 0 else [])
    for col in cols:
        column = c[:, col]
        mismatch = np.abs(column - np.conj(column[(-np.arange(n1)) % n1]))
        if np.any(mismatch > IMAG_TOL * max(1.0, np.abs(column).max())):
            raise ValidationError(f"column {col} is not conjugate-symmetric along the first axis")
    return np.fft.irfft2(c, s=(n1, n2))
