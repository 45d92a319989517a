"""Masked count grids: negative-binomial GP model, Gaussian filter baseline and SMSE.

Length scales are measured in grid cells and the Fourier period of each axis
is the padded grid size.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, special

from .. import fourier
from ..exceptions import ValidationError
from ..grid import MaskedGrid
from ..kernels import matern_spectrum_2d
from .mcmc import DualAveraging, _initial_step_size, leapfrog

#: Gaussian filter kernels are cut off at this many smoothing scales.
FILTER_TRUNCATE = 4.0


def smse(y_test, f_hat):
    """Scaled mean squared error of ``exp(f_hat)`` as a prediction of counts ``y_test``.

    Each squared error is divided by ``max(y, 1)``.
    """
    y = np.asarray(y_test, dtype=float).ravel()
    f = np.asarray(f_hat, dtype=float).ravel()
    if y.size == 0:
        raise ValidationError("smse needs at least one test point")
    if y.shape != f.shape:
        raise ValidationError(f"y_test and f_hat differ in size ({y.size} vs {f.size})")
    return float(np.mean((y - np.exp(f)) ** 2 / np.maximum(y, 1.0)))


def gaussian_filter_estimate(grid, scale):
    """Normalized Gaussian smoothing of the observed cells of ``grid``.

    Computes ``g * (b y) / (g * b)`` where ``b`` is the observation mask and
    ``g`` a Gaussian of standard deviation ``scale`` cells truncated at
    ``FILTER_TRUNCATE * scale``. Cells where the denominator vanishes are NaN.
    """
    scale = float(scale)
    if not scale > 0:
        raise ValidationError(f"smoothing scale must be positive, got {scale}")
    if grid.n_observed == 0:
        raise ValidationError("the grid has no observed cells")
    b = grid.mask.astype(float)
    y = np.where(grid.mask, grid.values, 0).astype(float)
    kwargs = dict(sigma=scale, mode="constant", cval=0.0, truncate=FILTER_TRUNCATE)
    num = ndimage.gaussian_filter(b * y, **kwargs)
    den = ndimage.gaussian_filter(b, **kwargs)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)


def nb2_logpmf(y, log_mean, kappa):
    """Negative binomial with mean ``exp(log_mean)`` and variance ``mu + kappa * mu^2``."""
    phi = 1.0 / kappa
    return (special.gammaln(y + phi) - special.gammaln(phi) - special.gammaln(y + 1)
            + phi * (np.log(phi) - np.logaddexp(np.log(phi), log_mean))
            + y * (log_mean - np.logaddexp(np.log(phi), log_mean)))


def _nb2_grad(y, log_mean, kappa):
    phi = 1.0 / kappa
    log_phi = np.log(phi)
    # phi (y - mu) / (phi + mu), written to stay finite for large log means
    return phi * (y * np.exp(-np.logaddexp(log_phi, log_mean)) - special.expit(log_mean - log_phi))


def _half_t2_logpdf(x):
    # Student-t with two degrees of freedom and unit scale, up to a constant
    return -1.5 * np.log1p(x * x / 2.0)


def simulate_count_grid(shape, pad, length_scale, sigma=1.0, loc=math.log(5.0), kappa=0.2,
                        nu=1.5, holdout=0.2, rng=None):
    """Draw counts from the negative-binomial GP model and hold out random cells.

    The latent field is simulated on the padded periodic grid and cropped.
    Returns ``(train, test_mask, counts, f)``: the training grid, the held-out
    mask, the full count matrix and the latent field.
    """
    rng = np.random.default_rng(rng)
    n1, n2 = shape
    p1, p2 = np.broadcast_to(pad, 2)
    m1, m2 = n1 + p1, n2 + p2
    spectrum = matern_spectrum_2d(m1, m2, nu, sigma, [length_scale] * 2, [m1, m2])
    f = fourier.fourier_inv_transform(rng.standard_normal((m1, m2)), loc, spectrum)[:n1, :n2]
    phi = 1.0 / kappa
    mu = np.exp(f)
    counts = rng.negative_binomial(phi, phi / (phi + mu))
    test = rng.uniform(size=shape) < holdout
    train = MaskedGrid(counts, ~test)
    return train, test, counts, f


@dataclass
class CountFitResult:
    """Posterior summary of :func:`masked_count_fit` over the unpadded region."""

    median_f: np.ndarray
    f_draws: np.ndarray
    hyper_draws: dict
    hmc_acceptance: float
    mh_acceptance: float
    wall_time: float
    pad: tuple = field(default=(0, 0))

    @property
    def predicted_counts(self):
        return np.exp(self.median_f)

    def hyper_summary(self):
        return {
            name: {
                "median": float(np.median(v)),
                "q05": float(np.quantile(v, 0.05)),
                "q95": float(np.quantile(v, 0.95)),
            }
            for name, v in self.hyper_draws.items()
        }


HYPER_NAMES = ("loc", "sigma", "length_scale", "kappa")


class _CountModel:
    """Joint log density of white noise ``z`` and hyperparameters on unconstrained scales.

    ``theta = (loc, log sigma, log length_scale, log kappa)``.
    """

    def __init__(self, grid, pad, length_scale_bounds, nu):
        n1, n2 = grid.shape
        self.shape = (n1, n2)
        padded = fourier.pad_grid(grid, pad)
        self.m1, self.m2 = padded.shape
        self.y = np.where(padded.mask, padded.values, 0).astype(float)
        self.mask = padded.mask
        self.log_bounds = np.log(np.asarray(length_scale_bounds, dtype=float))
        self.nu = nu
        self.norms = fourier.packed_norms((self.m1, self.m2))
        self._cache_key = None

    def scales(self, theta):
        key = (theta[1], theta[2])
        if key != self._cache_key:
            sigma, ell = np.exp(theta[1]), np.exp(theta[2])
            spectrum = matern_spectrum_2d(self.m1, self.m2, self.nu, sigma, [ell, ell], [self.m1, self.m2])
            self._scales = fourier.coefficient_scales(spectrum)
            self._cache_key = key
        return self._scales

    def log_mean(self, z, theta):
        return theta[0] + fourier._inverse(self.scales(theta) * z)

    def log_prior_theta(self, theta):
        loc, log_sigma, log_ell, log_kappa = theta
        if not self.log_bounds[0] <= log_ell <= self.log_bounds[1]:
            return -np.inf
        return (_half_t2_logpdf(loc) + _half_t2_logpdf(np.exp(log_sigma)) + log_sigma
                + _half_t2_logpdf(np.exp(log_kappa)) + log_kappa)

    def log_lik(self, z, theta):
        eta = self.log_mean(z, theta)
        return float(np.sum(nb2_logpmf(self.y, eta, np.exp(theta[3]))[self.mask]))

    def logp_z(self, theta):
        """Log density of ``z`` given ``theta`` (up to a constant) and its gradient."""
        kappa = np.exp(theta[3])

        def fn(z):
            if not np.all(np.isfinite(z)):
                return -np.inf, np.zeros_like(z)
            eta = self.log_mean(z, theta)
            lp = -0.5 * np.sum(z * z) + np.sum(nb2_logpmf(self.y, eta, kappa)[self.mask])
            g = np.where(self.mask, _nb2_grad(self.y, eta, kappa), 0.0)
            return float(lp), -z + self.scales(theta) * fourier._forward(g) / self.norms

        return fn


def masked_count_fit(grid, pad=(10, 10), length_scale_bounds=(2.0, 28.0), nu=1.5, n_warmup=500,
                     n_draws=500, n_steps=16, mh_steps=4, fixed=None, rng=None, init=None):
    """Fit the negative-binomial model with a latent 2D Fourier GP to a masked count grid.

    Hyperparameters ``loc`` (Student-t prior), ``sigma`` and ``kappa`` (half
    Student-t priors, two degrees of freedom) and ``length_scale``
    (log-uniform on ``length_scale_bounds``, in cells) are updated by
    random-walk Metropolis on unconstrained scales; the white noise ``z`` of
    the padded latent field is updated by HMC. ``fixed`` pins any
    hyperparameter to a value.

    Returns a :class:`CountFitResult` whose ``median_f`` is the posterior
    median of the latent log mean over the unpadded region.
    """
    if grid.n_observed == 0:
        raise ValidationError("the grid has no observed cells")
    lo, hi = length_scale_bounds
    if not 0 < lo < hi:
        raise ValidationError(f"invalid length scale bounds {length_scale_bounds}")
    fixed = dict(fixed or {})
    unknown = set(fixed) - set(HYPER_NAMES)
    if unknown:
        raise ValidationError(f"unknown hyperparameters {sorted(unknown)}")
    rng = np.random.default_rng(rng)
    start = time.perf_counter()
    model = _CountModel(grid, pad, length_scale_bounds, nu)

    observed = grid.values[grid.mask].astype(float)
    theta = np.array([
        np.log(observed.mean() + 0.5),
        0.0,
        0.5 * (np.log(lo) + np.log(hi)),
        np.log(0.5),
    ])
    if init:
        for name, value in init.items():
            theta[HYPER_NAMES.index(name)] = value if name == "loc" else np.log(value)
    for name, value in fixed.items():
        theta[HYPER_NAMES.index(name)] = value if name == "loc" else np.log(value)
    free = np.array([name not in fixed for name in HYPER_NAMES])

    z = np.zeros((model.m1, model.m2))
    lp_theta = model.log_prior_theta(theta) + model.log_lik(z, theta)
    proposal_scale = 0.1
    fn = model.logp_z(theta)
    lp_z, grad_z = fn(z)
    step = _initial_step_size(fn, z, lp_z, grad_z, rng)
    adapt = DualAveraging(step)

    n1, n2 = model.shape
    f_draws = np.empty((n_draws, n1, n2))
    hyper = np.empty((n_draws, 4))
    hmc_accept = mh_accept = mh_total = 0
    for it in range(n_warmup + n_draws):
        # Hyperparameters: alternate moves holding z fixed (non-centered) with
        # moves holding f fixed (centered); the latter leave the likelihood
        # unchanged and rescale z, contributing a Jacobian term.
        if free.any():
            for k in range(mh_steps):
                prop = theta + proposal_scale * rng.standard_normal(4) * free
                lp_prop = model.log_prior_theta(prop)
                if k % 2 == 0:
                    if np.isfinite(lp_prop):
                        lp_prop += model.log_lik(z, prop)
                    log_ratio = lp_prop - lp_theta
                    z_prop = z
                elif np.isfinite(lp_prop):
                    s_old, s_new = model.scales(theta), model.scales(prop)
                    f_cur = theta[0] + fourier._inverse(s_old * z)
                    z_prop = fourier._forward(f_cur - prop[0]) / s_new
                    log_ratio = (lp_prop - model.log_prior_theta(theta)
                                 - 0.5 * np.sum(z_prop * z_prop) + 0.5 * np.sum(z * z)
                                 + np.sum(np.log(s_old)) - np.sum(np.log(s_new)))
                else:
                    log_ratio = -np.inf
                accept = np.log(rng.uniform()) < log_ratio
                if accept:
                    theta, z = prop, z_prop
                    lp_theta = model.log_prior_theta(theta) + model.log_lik(z, theta)
                if it < n_warmup:
                    # Robbins-Monro scaling towards a quarter of proposals accepted
                    proposal_scale *= np.exp((accept - 0.25) / np.sqrt(it + 1.0))
                else:
                    mh_accept += accept
                    mh_total += 1

        # white noise given hyperparameters
        fn = model.logp_z(theta)
        lp_z, grad_z = fn(z)
        eps = step * rng.uniform(0.8, 1.2)
        p = rng.standard_normal(z.shape)
        h0 = lp_z - 0.5 * np.sum(p * p)
        z1, p1, lp1, g1 = leapfrog(fn, z, p, grad_z, eps, int(rng.integers(1, n_steps + 1)))
        h1 = lp1 - 0.5 * np.sum(p1 * p1)
        accept_prob = math.exp(min(0.0, h1 - h0)) if np.isfinite(h1) else 0.0
        if rng.uniform() < accept_prob:
            z = z1
            hmc_accept += it >= n_warmup
        lp_theta = model.log_prior_theta(theta) + model.log_lik(z, theta)
        if it < n_warmup:
            step = adapt.update(accept_prob)
            if it == n_warmup - 1:
                step = adapt.final_step_size
        else:
            k = it - n_warmup
            f_draws[k] = model.log_mean(z, theta)[:n1, :n2]
            hyper[k] = theta

    hyper_draws = {
        "loc": hyper[:, 0],
        "sigma": np.exp(hyper[:, 1]),
        "length_scale": np.exp(hyper[:, 2]),
        "kappa": np.exp(hyper[:, 3]),
    }
    return CountFitResult(
        median_f=np.median(f_draws, axis=0),
        f_draws=f_draws,
        hyper_draws=hyper_draws,
        hmc_acceptance=hmc_accept / n_draws,
        mh_acceptance=mh_accept / max(mh_total, 1),
        wall_time=time.perf_counter() - start,
        pad=tuple(int(p) for p in np.broadcast_to(pad, 2)),
    )
