"""Exact Gaussian process densities via a dense Cholesky factorization.

This is the cubic-cost baseline and the oracle against which the graph and
Fourier backends are tested.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import FactorizationError, ValidationError
from .kernels import cov_matrix

#: Default jitter relative to the marginal variance.
DEFAULT_RELATIVE_JITTER = 1e-8
#: Largest relative jitter tried before giving up.
MAX_RELATIVE_JITTER = 1e-4

LOG_2PI = np.log(2 * np.pi)


def jittered_cholesky(cov, jitter, scale=None):
    """Lower Cholesky factor of ``cov + jitter * I`` with escalation.

    If the factorization fails, the jitter is multiplied by ten until it
    exceeds ``MAX_RELATIVE_JITTER * scale``, where ``scale`` defaults to the
    largest diagonal entry. Returns ``(chol, jitter_used)``.
    """
    cov = np.asarray(cov, dtype=float)
    if scale is None:
        scale = float(np.max(np.diag(cov))) if cov.size else 1.0
    ceiling = MAX_RELATIVE_JITTER * scale * (1 + 1e-9)
    current = float(jitter)
    eye = np.eye(cov.shape[0])
    while current <= ceiling:
        try:
            chol = linalg.cholesky(cov + current * eye, lower=True, check_finite=False)
        except linalg.LinAlgError:
            chol = None
        if chol is not None and np.all(np.diag(chol) > 0):
            return chol, current
        current = current * 10 if current > 0 else DEFAULT_RELATIVE_JITTER * scale
    raise FactorizationError(
        f"covariance matrix is not positive definite even with jitter {MAX_RELATIVE_JITTER * scale:.3g}"
    )


@dataclass(frozen=True)
class CholeskyGp:
    """Multivariate normal ``N(loc, cov + jitter * I)`` stored through its Cholesky factor."""

    loc: np.ndarray
    chol: np.ndarray
    jitter: float = 0.0

    def __post_init__(self):
        loc = np.asarray(self.loc, dtype=float)
        chol = np.asarray(self.chol, dtype=float)
        if loc.ndim != 1 or chol.shape != (loc.shape[0], loc.shape[0]):
            raise ValidationError(f"loc shape {loc.shape} does not match factor shape {chol.shape}")
        loc.setflags(write=False)
        chol.setflags(write=False)
        object.__setattr__(self, "loc", loc)
        object.__setattr__(self, "chol", chol)

    @classmethod
    def from_cov(cls, loc, cov, jitter=None):
        """Factorize ``cov``; ``jitter`` defaults to ``1e-8`` times the largest variance."""
        cov = np.asarray(cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValidationError(f"covariance must be square, got shape {cov.shape}")
        loc = np.broadcast_to(np.asarray(loc, dtype=float), (cov.shape[0],))
        scale = float(np.max(np.diag(cov)))
        if jitter is None:
            jitter = DEFAULT_RELATIVE_JITTER * scale
        chol, used = jittered_cholesky(cov, jitter, scale)
        return cls(loc, chol, used)

    @classmethod
    def from_kernel(cls, kernel, points, loc=0.0, jitter=None):
        if jitter is None:
            jitter = DEFAULT_RELATIVE_JITTER * kernel.variance
        return cls.from_cov(loc, cov_matrix(kernel, points), jitter)

    @property
    def n(self):
        return self.loc.shape[0]

    @property
    def cov(self):
        """The jittered covariance ``L L^T``."""
        return self.chol @ self.chol.T

    @property
    def log_det_chol(self):
        return float(np.sum(np.log(np.diag(self.chol))))

    def _check(self, v, name):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise ValidationError(f"{name} must have shape ({self.n},), got {v.shape}")
        return v


def dense_lpdf(f, gp):
    """Log density of ``f`` under ``gp`` including all normalizing constants."""
    f = gp._check(f, "f")
    z = linalg.solve_triangular(gp.chol, f - gp.loc, lower=True, check_finite=False)
    return float(-0.5 * z @ z - gp.log_det_chol - 0.5 * gp.n * LOG_2PI)


def dense_lpdf_grad(f, gp):
    """Gradient of :func:`dense_lpdf` with respect to ``f``."""
    f = gp._check(f, "f")
    return -linalg.cho_solve((gp.chol, True), f - gp.loc, check_finite=False)


def dense_inv_transform(z, gp):
    """Map white noise ``z`` to ``loc + L z``."""
    z = gp._check(z, "z")
    return gp.loc + gp.chol @ z


def dense_inv_transform_adjoint(g, gp):
    """Pull a cotangent on ``f`` back to ``z``: ``L^T g``."""
    g = gp._check(g, "g")
    return gp.chol.T @ g


def dense_whiten(f, gp):
    """Inverse of :func:`dense_inv_transform`."""
    f = gp._check(f, "f")
    return linalg.solve_triangular(gp.chol, f - gp.loc, lower=True, check_finite=False)


def gp_regression_posterior(y, noise_sd, gp):
    """Posterior mean and covariance of ``f`` given ``y ~ N(f, noise_sd^2)``.

    The prior covariance is the (jittered) covariance represented by ``gp``.
    """
    y = gp._check(y, "y")
    noise_sd = float(noise_sd)
    if not noise_sd > 0:
        raise ValidationError(f"noise_sd must be positive, got {noise_sd}")
    K = gp.cov
    A = K + noise_sd ** 2 * np.eye(gp.n)
    cho = linalg.cho_factor(A, lower=True, check_finite=False)
    mean = gp.loc + K @ linalg.cho_solve(cho, y - gp.loc, check_finite=False)
    cov = K - K @ linalg.cho_solve(cho, K, check_finite=False)
    cov = 0.5 * (cov + cov.T)
    return mean, cov
