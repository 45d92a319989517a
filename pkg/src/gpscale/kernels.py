"""Stationary kernels in the real domain and as power spectra on periodic grids.

Spectra follow the unnormalized DFT convention of :mod:`gpscale.fft`: the
spectrum of a kernel is the DFT of its first circulant row, so the row is
recovered by ``irfft(spectrum)`` and its lag-zero entry is close to
``sigma ** 2`` whenever the correlation length is small compared with the
period. Frequencies are discretized naively without aliasing corrections.
"""

from dataclasses import dataclass
from math import lgamma

import numpy as np

from . import fft
from .exceptions import UnsupportedParameterError, ValidationError

SQUARED_EXPONENTIAL = "squared-exponential"
MATERN = "matern"
REAL_DOMAIN_NU = (0.5, 1.5, 2.5)


def _positive(name, value):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be positive and finite, got {value}")
    return value


def _positive_vector(name, values, size=None):
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.ndim != 1 or (size is not None and values.shape[0] != size):
        raise ValidationError(f"{name} must be a vector of length {size}, got shape {values.shape}")
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise ValidationError(f"{name} must be positive and finite, got {values}")
    return values


@dataclass(frozen=True)
class Kernel:
    """Parametric stationary covariance function.

    Attributes
    ----------
    family : str
        ``"squared-exponential"`` or ``"matern"``.
    sigma : float
        Marginal scale; the kernel at zero distance is ``sigma ** 2``.
    length_scales : tuple of float
        Correlation length per dimension. A single value is broadcast over
        all dimensions.
    nu : float or None
        Matern smoothness.
    """

    family: str
    sigma: float
    length_scales: tuple
    nu: float = None

    def __post_init__(self):
        if self.family not in (SQUARED_EXPONENTIAL, MATERN):
            raise ValidationError(f"unknown kernel family {self.family!r}")
        _positive("sigma", self.sigma)
        ells = tuple(float(v) for v in _positive_vector("length_scales", self.length_scales))
        object.__setattr__(self, "length_scales", ells)
        if self.family == MATERN:
            if self.nu is None:
                raise ValidationError("matern kernels need a smoothness nu")
            _positive("nu", self.nu)
        elif self.nu is not None:
            raise ValidationError("nu only applies to matern kernels")

    @classmethod
    def squared_exponential(cls, sigma, length_scale):
        return cls(SQUARED_EXPONENTIAL, sigma, tuple(np.atleast_1d(length_scale)))

    @classmethod
    def matern(cls, nu, sigma, length_scale):
        return cls(MATERN, sigma, tuple(np.atleast_1d(length_scale)), float(nu))

    @property
    def variance(self):
        return self.sigma ** 2

    @property
    def real_domain_supported(self):
        return self.family == SQUARED_EXPONENTIAL or self.nu in REAL_DOMAIN_NU

    def scaled_distance(self, x1, x2):
        """Euclidean distance between rows of ``x1`` and ``x2`` after dividing by the length scales.

        Both inputs have shape ``(..., p)``; broadcasting applies to the
        leading axes.
        """
        ells = np.asarray(self.length_scales)
        diff = (np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)) / ells
        return np.sqrt(np.sum(diff * diff, axis=-1))

    def from_scaled_distance(self, r):
        """Evaluate the kernel at length-scale-normalized distance ``r``."""
        r = np.asarray(r, dtype=float)
        s2 = self.variance
        if self.family == SQUARED_EXPONENTIAL:
            return s2 * np.exp(-0.5 * r * r)
        if self.nu == 0.5:
            return s2 * np.exp(-r)
        if self.nu == 1.5:
            a = np.sqrt(3.0) * r
            return s2 * (1.0 + a) * np.exp(-a)
        if self.nu == 2.5:
            a = np.sqrt(5.0) * r
            return s2 * (1.0 + a + a * a / 3.0) * np.exp(-a)
        raise UnsupportedParameterError(
            f"real-domain matern kernels support nu in {REAL_DOMAIN_NU}, got {self.nu}; "
            "use matern_spectrum_1d or matern_spectrum_2d for other values"
        )

    def __call__(self, x1, x2):
        if self.family == SQUARED_EXPONENTIAL:
            ells = np.asarray(self.length_scales)
            diff = (np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)) / ells
            return self.variance * np.exp(-0.5 * np.sum(diff * diff, axis=-1))
        return self.from_scaled_distance(self.scaled_distance(x1, x2))


def se_cov(distance, sigma, ell):
    """Squared exponential covariance ``sigma^2 exp(-d^2 / (2 ell^2))``."""
    sigma = _positive("sigma", sigma)
    ell = _positive("ell", ell)
    d = np.asarray(distance, dtype=float) / ell
    return sigma ** 2 * np.exp(-0.5 * d * d)


def matern_cov(distance, sigma, ell, nu):
    """Closed-form Matern covariance for ``nu`` in ``{1/2, 3/2, 5/2}``."""
    sigma = _positive("sigma", sigma)
    ell = _positive("ell", ell)
    nu = _positive("nu", nu)
    if nu not in REAL_DOMAIN_NU:
        raise UnsupportedParameterError(
            f"real-domain matern kernels support nu in {REAL_DOMAIN_NU}, got {nu}; "
            "use matern_spectrum_1d or matern_spectrum_2d for other values"
        )
    return Kernel.matern(nu, sigma, ell).from_scaled_distance(np.asarray(distance, dtype=float) / ell)


@dataclass(frozen=True)
class Spectrum1D:
    """Non-negative power spectrum of a periodic kernel on ``n`` grid points."""

    values: np.ndarray
    n: int
    period: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        n = int(self.n)
        if n < 1:
            raise ValidationError(f"n must be positive, got {n}")
        if values.shape != (n // 2 + 1,):
            raise ValidationError(f"expected {n // 2 + 1} spectrum values for n={n}, got {values.shape}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValidationError("spectrum values must be finite and non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "period", _positive("period", self.period))


@dataclass(frozen=True)
class Spectrum2D:
    """Power spectrum of a periodic kernel on an ``n1 x n2`` grid in the half layout.

    ``values`` has shape ``(n1, n2 // 2 + 1)``. In the self-conjugate columns
    (zero frequency and, for even ``n2``, Nyquist) rows ``k`` and ``n1 - k``
    must carry equal power.
    """

    values: np.ndarray
    n1: int
    n2: int
    periods: tuple = (1.0, 1.0)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        n1, n2 = int(self.n1), int(self.n2)
        if n1 < 1 or n2 < 1:
            raise ValidationError(f"shape must be positive, got ({n1}, {n2})")
        if values.shape != (n1, n2 // 2 + 1):
            raise ValidationError(f"expected shape {(n1, n2 // 2 + 1)}, got {values.shape}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValidationError("spectrum values must be finite and non-negative")
        folded = values[(-np.arange(n1)) % n1]
        for col in [0] + ([n2 // 2] if n2 % 2 == 0 else []):
            if not np.allclose(values[:, col], folded[:, col], rtol=1e-12, atol=0):
                raise ValidationError(f"column {col} violates conjugate symmetry of the half layout")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "n1", n1)
        object.__setattr__(self, "n2", n2)
        periods = tuple(float(v) for v in _positive_vector("periods", self.periods, 2))
        object.__setattr__(self, "periods", periods)

    @property
    def shape(self):
        return (self.n1, self.n2)


def _check_grid(n):
    n = int(n)
    if n < 1:
        raise ValidationError(f"grid size must be positive, got {n}")
    return n


def se_spectrum_1d(n, sigma, ell, period):
    """Discrete power spectrum of the squared exponential kernel."""
    n = _check_grid(n)
    sigma, ell, period = _positive("sigma", sigma), _positive("ell", ell), _positive("period", period)
    xi = np.arange(n // 2 + 1)
    values = (np.sqrt(2 * np.pi) * n * sigma ** 2 * ell / period
              * np.exp(-2 * (np.pi * xi * ell / period) ** 2))
    return Spectrum1D(values, n, period)


def _matern_prefactor(nu, p):
    # (2 pi / nu)^(p/2) Gamma(nu + p/2) / Gamma(nu), via log-gamma for large nu
    return np.exp(0.5 * p * np.log(2 * np.pi / nu) + lgamma(nu + p / 2) - lgamma(nu))


def matern_spectrum_1d(n, nu, sigma, ell, period):
    """Discrete power spectrum of the Matern kernel for any ``nu > 0``."""
    n = _check_grid(n)
    nu = _positive("nu", nu)
    sigma, ell, period = _positive("sigma", sigma), _positive("ell", ell), _positive("period", period)
    xi = np.arange(n // 2 + 1)
    q2 = 2 * (np.pi * ell * xi) ** 2 / (nu * period ** 2)
    values = sigma ** 2 * n * ell / period * _matern_prefactor(nu, 1) * (1 + q2) ** -(nu + 0.5)
    return Spectrum1D(values, n, period)


def _folded_frequencies(n1, n2):
    xi1 = np.arange(n1)
    xi1 = np.minimum(xi1, n1 - xi1)
    xi2 = np.arange(n2 // 2 + 1)
    return xi1[:, None], xi2[None, :]


def se_spectrum_2d(n1, n2, sigma, length_scales, periods):
    """Separable squared exponential spectrum on an ``n1 x n2`` periodic grid."""
    n1, n2 = _check_grid(n1), _check_grid(n2)
    sigma = _positive("sigma", sigma)
    ells = _positive_vector("length_scales", np.broadcast_to(length_scales, 2), 2)
    periods = _positive_vector("periods", np.broadcast_to(periods, 2), 2)
    xi1, xi2 = _folded_frequencies(n1, n2)
    factors = []
    for xi, ell, period in zip((xi1, xi2), ells, periods):
        factors.append(np.sqrt(2 * np.pi) * ell / period * np.exp(-2 * (np.pi * xi * ell / period) ** 2))
    values = sigma ** 2 * n1 * n2 * factors[0] * factors[1]
    return Spectrum2D(values, n1, n2, tuple(periods))


def matern_spectrum_2d(n1, n2, nu, sigma, length_scales, periods):
    """Matern spectrum on an ``n1 x n2`` periodic grid.

    Anisotropic length scales enter as a sum of squared rescaled frequencies
    inside the power law and as the product ``ell1 * ell2 / (L1 * L2)`` in the
    prefactor.
    """
    n1, n2 = _check_grid(n1), _check_grid(n2)
    nu = _positive("nu", nu)
    sigma = _positive("sigma", sigma)
    ells = _positive_vector("length_scales", np.broadcast_to(length_scales, 2), 2)
    periods = _positive_vector("periods", np.broadcast_to(periods, 2), 2)
    xi1, xi2 = _folded_frequencies(n1, n2)
    q2 = (2 * (np.pi * ells[0] * xi1) ** 2 / (nu * periods[0] ** 2)
          + 2 * (np.pi * ells[1] * xi2) ** 2 / (nu * periods[1] ** 2))
    scale = n1 * n2 * ells[0] * ells[1] / (periods[0] * periods[1])
    values = sigma ** 2 * scale * _matern_prefactor(nu, 2) * (1 + q2) ** -(nu + 1)
    return Spectrum2D(values, n1, n2, tuple(periods))


def cov_matrix(kernel, points):
    """Dense covariance matrix of ``kernel`` evaluated at all pairs of ``points``.

    ``points`` has shape ``(n, p)``; a 1-d array is treated as ``p = 1``.
    """
    if not kernel.real_domain_supported:
        raise UnsupportedParameterError(
            f"no closed-form real-domain kernel for matern nu={kernel.nu}"
        )
    x = _as_points(points, kernel)
    return kernel(x[:, None, :], x[None, :, :])


def _as_points(points, kernel=None):
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValidationError(f"points must have shape (n, p), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("points contain non-finite values")
    if kernel is not None and len(kernel.length_scales) not in (1, x.shape[1]):
        raise ValidationError(
            f"kernel has {len(kernel.length_scales)} length scales but points have {x.shape[1]} dimensions"
        )
    return x


def periodic_kernel_row(spectrum):
    """First row of the circulant covariance implied by ``spectrum``.

    ``row[d]`` is the covariance between grid points ``d`` cells apart.
    """
    return fft.irfft(spectrum.values.astype(complex), spectrum.n)


def periodic_kernel_grid(spectrum):
    """Two-dimensional analogue of :func:`periodic_kernel_row`."""
    return fft.irfft2(spectrum.values.astype(complex), spectrum.n1, spectrum.n2)
