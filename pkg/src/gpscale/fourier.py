"""Exact GP densities and whitening transforms on periodic grids.

The real FFT of a stationary periodic GP has independent coefficients with
variance ``n * spectrum`` (split evenly between real and imaginary parts away
from the self-conjugate frequencies). The independent real degrees of freedom
are stored in a *packed* real array with the same number of entries as the
signal:

* 1D, length ``n``: ``[Re c_0, ..., Re c_{n//2}, Im c_1, ..., Im c_{(n-1)//2}]``.
* 2D, shape ``(n1, n2)``: column ``k`` for ``0 <= k <= n2 // 2`` holds the real
  parts of half-spectrum column ``k`` and column ``n2 // 2 + k`` holds its
  imaginary parts. The zero and Nyquist columns are conjugate-symmetric along
  the first axis, so they instead hold their own 1D packing.

For example, on a 3 x 4 grid the columns are ``[pack1d(c[:, 0]), Re c[:, 1],
pack1d(c[:, 2]), Im c[:, 1]]``.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import fft
from .exceptions import ValidationError
from .grid import MaskedGrid
from .kernels import Spectrum1D, Spectrum2D

PACKED_LAYOUT_VERSION = "packed-rfft-v1"
LOG_2PI = np.log(2 * np.pi)


# ---------------------------------------------------------------------------
# packing


def _packed_frequency_1d(n):
    """Frequency and imaginary flag of every packed entry for length ``n``."""
    real = np.arange(n // 2 + 1)
    imag = np.arange(1, (n + 1) // 2)
    return np.concatenate([real, imag]), np.concatenate([np.zeros(real.size, bool), np.ones(imag.size, bool)])


def _self_conjugate(xi, n):
    return (xi == 0) | ((n % 2 == 0) & (xi == n // 2))


def pack_rfft(c, n):
    """Pack a 1D half spectrum of a real signal into ``n`` reals."""
    n = int(n)
    c = np.asarray(c, dtype=complex)
    if c.shape != (n // 2 + 1,):
        raise ValidationError(f"expected {n // 2 + 1} coefficients for n={n}, got shape {c.shape}")
    fft._check_self_conjugate(c, n)
    return np.concatenate([c.real, c.imag[1:(n + 1) // 2]])


def unpack_rfft(p, n):
    """Inverse of :func:`pack_rfft`."""
    n = int(n)
    p = np.asarray(p, dtype=float)
    if p.shape != (n,):
        raise ValidationError(f"expected {n} packed values, got shape {p.shape}")
    half = n // 2 + 1
    c = p[:half].astype(complex)
    c.imag[1:(n + 1) // 2] = p[half:]
    return c


def pack_rfft2(c, n1, n2):
    """Pack a 2D half spectrum of shape ``(n1, n2 // 2 + 1)`` into an ``(n1, n2)`` real matrix."""
    n1, n2 = int(n1), int(n2)
    c = np.asarray(c, dtype=complex)
    half = n2 // 2 + 1
    if c.shape != (n1, half):
        raise ValidationError(f"expected shape {(n1, half)}, got {c.shape}")
    out = np.empty((n1, n2))
    out[:, :half] = c.real
    out[:, half:] = c.imag[:, 1:(n2 + 1) // 2]
    for col in _self_conjugate_columns(n2):
        column = c[:, col]
        if np.any(np.abs(column - np.conj(column[(-np.arange(n1)) % n1])) > fft.IMAG_TOL * max(1.0, np.abs(column).max())):
            raise ValidationError(f"column {col} is not conjugate-symmetric along the first axis")
        out[:, col] = pack_rfft(column[:n1 // 2 + 1], n1)
    return out


def unpack_rfft2(p, n1, n2):
    """Inverse of :func:`pack_rfft2`."""
    n1, n2 = int(n1), int(n2)
    p = np.asarray(p, dtype=float)
    if p.shape != (n1, n2):
        raise ValidationError(f"expected packed shape {(n1, n2)}, got {p.shape}")
    half = n2 // 2 + 1
    c = p[:, :half].astype(complex)
    c.imag[:, 1:(n2 + 1) // 2] = p[:, half:]
    rows = (-np.arange(n1)) % n1
    for col in _self_conjugate_columns(n2):
        head = unpack_rfft(p[:, col], n1)
        full = np.empty(n1, complex)
        full[:n1 // 2 + 1] = head
        full[n1 // 2 + 1:] = np.conj(head[rows[n1 // 2 + 1:]])
        c[:, col] = full
    return c


def _self_conjugate_columns(n2):
    return [0] + ([n2 // 2] if n2 % 2 == 0 else [])


def _packed_layout_2d(n1, n2):
    """First-axis frequency, half-spectrum column and self-conjugacy of each packed 2D entry."""
    half = n2 // 2 + 1
    cols = np.concatenate([np.arange(half), np.arange(1, (n2 + 1) // 2)])
    rows = np.broadcast_to(np.arange(n1)[:, None], (n1, n2)).copy()
    selfconj = np.zeros((n1, n2), bool)
    xi1, _ = _packed_frequency_1d(n1)
    for col in _self_conjugate_columns(n2):
        rows[:, col] = xi1
        selfconj[:, col] = _self_conjugate(xi1, n1)
    return rows, np.broadcast_to(cols, (n1, n2)), selfconj


def packed_norms(shape):
    """Squared norm of the linear functional producing each packed entry.

    The packed coefficients are obtained from the signal by a linear map with
    orthogonal rows; these are their squared lengths (``n`` for self-conjugate
    frequencies, ``n / 2`` otherwise).
    """
    if np.ndim(shape) == 0 or len(shape) == 1:
        n = int(np.atleast_1d(shape)[0])
        xi, _ = _packed_frequency_1d(n)
        return np.where(_self_conjugate(xi, n), float(n), n / 2.0)
    n1, n2 = map(int, shape)
    _, _, selfconj = _packed_layout_2d(n1, n2)
    return np.where(selfconj, float(n1 * n2), n1 * n2 / 2.0)


def packed_log_jacobian(shape):
    """Log absolute determinant of the packed real FFT as a linear map.

    Equals ``0.5 * N * log(N)`` minus ``log 2`` for every pair of real and
    imaginary components, where ``N`` is the number of grid points.
    """
    return 0.5 * float(np.sum(np.log(packed_norms(shape))))


def _packed_spectrum(spectrum):
    if isinstance(spectrum, Spectrum1D):
        xi, _ = _packed_frequency_1d(spectrum.n)
        return spectrum.values[xi]
    if isinstance(spectrum, Spectrum2D):
        rows, cols, _ = _packed_layout_2d(spectrum.n1, spectrum.n2)
        return spectrum.values[rows, cols]
    raise ValidationError(f"expected Spectrum1D or Spectrum2D, got {type(spectrum).__name__}")


def _shape(spectrum):
    return (spectrum.n,) if isinstance(spectrum, Spectrum1D) else (spectrum.n1, spectrum.n2)


def coefficient_scales(spectrum):
    """Standard deviation of each packed coefficient under the GP prior.

    Self-conjugate entries have variance ``N * spectrum``; real and imaginary
    parts of the other frequencies have ``N * spectrum / 2`` each.
    """
    values = _packed_spectrum(spectrum)
    if np.any(values <= 0):
        raise ValidationError("spectrum must be strictly positive for a non-degenerate prior")
    return np.sqrt(packed_norms(_shape(spectrum)) * values)


def _forward(x):
    if x.ndim == 1:
        return pack_rfft(fft.rfft(x), x.shape[0])
    return pack_rfft2(fft.rfft2(x), *x.shape)


def _inverse(p):
    if p.ndim == 1:
        return fft.irfft(unpack_rfft(p, p.shape[0]), p.shape[0])
    return fft.irfft2(unpack_rfft2(p, *p.shape), *p.shape)


def _prepare(spectrum, *arrays):
    shape = _shape(spectrum)
    out = []
    for name, a, broadcast in arrays:
        a = np.asarray(a, dtype=float)
        if broadcast:
            a = np.broadcast_to(a, shape)
        if a.shape != shape:
            raise ValidationError(f"{name} must have shape {shape}, got {a.shape}")
        out.append(a)
    return out


# ---------------------------------------------------------------------------
# densities and transforms


def fourier_lpdf(f, loc, spectrum):
    """Exact log density of ``f`` under the periodic GP with power ``spectrum``.

    Works for 1D (``Spectrum1D``) and 2D (``Spectrum2D``) grids; the result
    equals the multivariate normal density with the circulant covariance
    :func:`gpscale.kernels.periodic_kernel_row` builds, without jitter.
    """
    f, loc = _prepare(spectrum, ("f", f, False), ("loc", loc, True))
    scales = coefficient_scales(spectrum)
    z = _forward(f - loc) / scales
    shape = _shape(spectrum)
    return float(-0.5 * np.sum(z * z) - np.sum(np.log(scales)) - 0.5 * z.size * LOG_2PI
                 + packed_log_jacobian(shape))


fourier_lpdf_2d = fourier_lpdf


def fourier_lpdf_grad(f, loc, spectrum):
    """Gradient of :func:`fourier_lpdf` with respect to ``f``."""
    f, loc = _prepare(spectrum, ("f", f, False), ("loc", loc, True))
    scales = coefficient_scales(spectrum)
    p = _forward(f - loc)
    return -_inverse(packed_norms(_shape(spectrum)) * p / scales ** 2)


def fourier_inv_transform(z, loc, spectrum):
    """Map white noise ``z`` (packed layout) to a GP realization on the grid."""
    z, loc = _prepare(spectrum, ("z", z, False), ("loc", loc, True))
    return loc + _inverse(coefficient_scales(spectrum) * z)


fourier_inv_transform_2d = fourier_inv_transform


def fourier_whiten(f, loc, spectrum):
    """Inverse of :func:`fourier_inv_transform`."""
    f, loc = _prepare(spectrum, ("f", f, False), ("loc", loc, True))
    return _forward(f - loc) / coefficient_scales(spectrum)


fourier_whiten_2d = fourier_whiten


def adjoint_inv_transform(g, spectrum):
    """Pull a cotangent ``g`` on ``f`` back to the white noise ``z``.

    The inverse transform is linear, so this is the gradient of
    ``sum(g * fourier_inv_transform(z, loc, spectrum))`` with respect to ``z``.
    """
    (g,) = _prepare(spectrum, ("g", g, False))
    return coefficient_scales(spectrum) * _forward(g) / packed_norms(_shape(spectrum))


def fourier_log_jacobian_constant(spectrum):
    """Constant ``c`` with ``fourier_lpdf(f) = std_normal_lpdf(fourier_whiten(f)) + c``."""
    return packed_log_jacobian(_shape(spectrum)) - float(np.sum(np.log(coefficient_scales(spectrum))))


# ---------------------------------------------------------------------------
# mode truncation


@dataclass(frozen=True)
class TruncatedBasis:
    """The lowest ``m`` Fourier modes (frequencies ``0..m-1``) of a 1D spectrum."""

    spectrum: Spectrum1D
    m: int

    def __post_init__(self):
        n = self.spectrum.n
        m = int(self.m)
        if not 0 < m <= n // 2 + 1:
            raise ValidationError(f"m must lie in [1, {n // 2 + 1}], got {m}")
        # Far tails of smooth spectra may underflow to zero; only kept modes need power.
        if np.any(self.spectrum.values[:m] <= 0):
            raise ValidationError("retained modes must have strictly positive power")
        object.__setattr__(self, "m", m)

    @property
    def n(self):
        return self.spectrum.n

    @property
    def n_imag(self):
        return min(self.m - 1, (self.n + 1) // 2 - 1)

    @property
    def size(self):
        """Number of white-noise components: real parts of all kept modes plus their imaginary parts."""
        return self.m + self.n_imag

    @property
    def retained_power(self):
        """Fraction of the prior variance carried by the kept modes."""
        n = self.n
        xi = np.arange(n // 2 + 1)
        weights = np.where(_self_conjugate(xi, n), 1.0, 2.0)
        power = weights * self.spectrum.values
        return float(power[:self.m].sum() / power.sum())

    def embed(self, z):
        """Place a length-``size`` vector into the full packed layout, zeros elsewhere."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.size,):
            raise ValidationError(f"z must have shape ({self.size},), got {z.shape}")
        full = np.zeros(self.n)
        half = self.n // 2 + 1
        full[:self.m] = z[:self.m]
        full[half:half + self.n_imag] = z[self.m:]
        return full

    def restrict(self, packed):
        """Adjoint of :meth:`embed`."""
        half = self.n // 2 + 1
        return np.concatenate([packed[:self.m], packed[half:half + self.n_imag]])

    @property
    def scales(self):
        """Prior standard deviations of the kept packed coefficients."""
        full = np.sqrt(packed_norms(self.n) * _packed_spectrum(self.spectrum))
        return self.restrict(full)


def truncated_inv_transform(z, loc, basis):
    """GP realization using only the modes kept by ``basis``.

    ``z`` holds the real parts of modes ``0..m-1`` followed by the imaginary
    parts of the non-self-conjugate ones; with ``m = n // 2 + 1`` this is the
    full packed layout and the result equals :func:`fourier_inv_transform`.
    """
    (loc,) = _prepare(basis.spectrum, ("loc", loc, True))
    z = np.asarray(z, dtype=float)
    if z.shape != (basis.size,):
        raise ValidationError(f"z must have shape ({basis.size},), got {z.shape}")
    return loc + _inverse(basis.embed(basis.scales * z))


def truncated_inv_transform_adjoint(g, basis):
    (g,) = _prepare(basis.spectrum, ("g", g, False))
    return basis.scales * basis.restrict(_forward(g) / packed_norms(basis.n))


# ---------------------------------------------------------------------------
# padding and serialization


def pad_grid(grid, pad):
    """Append unobserved cells after the data along each axis.

    The original data occupy the leading block of the returned grid.
    """
    pad = tuple(int(p) for p in np.broadcast_to(pad, 2))
    if any(p < 0 for p in pad):
        raise ValidationError(f"padding must be non-negative, got {pad}")
    n1, n2 = grid.shape
    values = np.zeros((n1 + pad[0], n2 + pad[1]), dtype=grid.values.dtype)
    mask = np.zeros(values.shape, bool)
    values[:n1, :n2] = grid.values
    mask[:n1, :n2] = grid.mask
    return MaskedGrid(values, mask, grid.cell_size)


def dump_latent(z, path):
    """Write a packed white-noise array as JSON tagged with the layout version."""
    z = np.asarray(z, dtype=float)
    with open(path, "w") as fp:
        json.dump({"layout": PACKED_LAYOUT_VERSION, "shape": list(z.shape), "values": z.ravel().tolist()}, fp)


def load_latent(path):
    with open(path) as fp:
        data = json.load(fp)
    if data.get("layout") != PACKED_LAYOUT_VERSION:
        raise ValidationError(f"unsupported packed layout {data.get('layout')!r}")
    return np.asarray(data["values"], dtype=float).reshape(data["shape"])
