"""Uniform wrappers around the three GP backends for the 1D benchmark problem.

Each backend exposes the prior log density and its gradient for the centered
parameterization, and the inverse transform with its adjoint for the
non-centered one. Points sit on the integer grid ``0, ..., n - 1``.
"""

from dataclasses import dataclass, field

import numpy as np

from .. import dense, fourier, graph
from ..dense import LOG_2PI
from ..exceptions import ValidationError
from ..kernels import Kernel, periodic_kernel_row, se_spectrum_1d

BACKENDS = ("dense", "graph", "fourier")
PARAMETERIZATIONS = ("centered", "non-centered")


@dataclass(frozen=True)
class BenchmarkConfig:
    """Settings for the benchmark model ``f ~ GP``, ``y ~ N(f, kappa^2)``.

    Defaults follow the unit-scale benchmark: ``sigma = ell = 1``, five nearest
    predecessors for the graph backend, and a one minute budget.
    """

    n: int = 64
    kappa: float = 1.0
    sigma: float = 1.0
    ell: float = 1.0
    backend: str = "fourier"
    parameterization: str = "non-centered"
    q: int = 5
    seed: int = 0
    budget_seconds: float = 60.0

    def __post_init__(self):
        if int(self.n) < 2:
            raise ValidationError(f"n must be at least 2, got {self.n}")
        if not self.kappa >= 0:
            raise ValidationError(f"kappa must be non-negative, got {self.kappa}")
        if not (self.sigma > 0 and self.ell > 0):
            raise ValidationError("sigma and ell must be positive")
        if self.backend not in BACKENDS:
            raise ValidationError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.parameterization not in PARAMETERIZATIONS:
            raise ValidationError(
                f"parameterization must be one of {PARAMETERIZATIONS}, got {self.parameterization!r}"
            )
        if self.backend == "graph" and int(self.q) < 1:
            raise ValidationError(f"graph backend needs q >= 1, got {self.q}")
        if not self.budget_seconds > 0:
            raise ValidationError("budget_seconds must be positive")

    @property
    def locations(self):
        return np.arange(self.n, dtype=float)

    @property
    def kernel(self):
        return Kernel.squared_exponential(self.sigma, self.ell)


class DenseBackend:
    name = "dense"

    def __init__(self, config):
        self.gp = dense.CholeskyGp.from_kernel(config.kernel, config.locations)

    def lpdf(self, f):
        return dense.dense_lpdf(f, self.gp)

    def lpdf_grad(self, f):
        return dense.dense_lpdf_grad(f, self.gp)

    def inv(self, z):
        return dense.dense_inv_transform(z, self.gp)

    def inv_adjoint(self, g):
        return dense.dense_inv_transform_adjoint(g, self.gp)

    def whiten(self, f):
        return dense.dense_whiten(f, self.gp)

    def prior_cov(self):
        return self.gp.cov


class GraphBackend:
    name = "graph"

    def __init__(self, config):
        self.dag = graph.DagGp.nearest_neighbor(config.locations, config.q, config.kernel)
        self.cond = self.dag.conditionals

    def lpdf(self, f):
        return graph.conditional_lpdf(f, 0.0, self.cond)

    def lpdf_grad(self, f):
        return graph.conditional_lpdf_grad(f, 0.0, self.cond)

    def inv(self, z):
        return self.cond.solve_residuals(np.sqrt(self.cond.var) * z)

    def inv_adjoint(self, g):
        return np.sqrt(self.cond.var) * self.cond.solve_residuals_adjoint(g)

    def whiten(self, f):
        return self.cond.residuals(f) / np.sqrt(self.cond.var)

    def prior_cov(self):
        return graph.graph_implied_cov(self.dag)


class FourierBackend:
    name = "fourier"

    def __init__(self, config):
        # unit grid spacing, so the period equals the number of points
        self.spectrum = se_spectrum_1d(config.n, config.sigma, config.ell, config.n)
        self.scales = fourier.coefficient_scales(self.spectrum)
        self.norms = fourier.packed_norms(config.n)
        self.const = fourier.fourier_log_jacobian_constant(self.spectrum) - 0.5 * config.n * LOG_2PI

    def lpdf(self, f):
        z = fourier._forward(f) / self.scales
        return float(-0.5 * z @ z + self.const)

    def lpdf_grad(self, f):
        return -fourier._inverse(self.norms * fourier._forward(f) / self.scales ** 2)

    def inv(self, z):
        return fourier._inverse(self.scales * z)

    def inv_adjoint(self, g):
        return self.scales * fourier._forward(g) / self.norms

    def whiten(self, f):
        return fourier._forward(f) / self.scales

    def prior_cov(self):
        row = periodic_kernel_row(self.spectrum)
        n = row.size
        return row[(np.arange(n)[:, None] - np.arange(n)[None, :]) % n]


def make_backend(config):
    return {"dense": DenseBackend, "graph": GraphBackend, "fourier": FourierBackend}[config.backend](config)


@dataclass
class NormalPosterior:
    """Log posterior of the benchmark model in either parameterization.

    ``logp_and_grad(x)`` evaluates at ``x = f`` (centered) or ``x = z``
    (non-centered); ``to_f`` maps a state to the latent function values.
    """

    backend: object
    y: np.ndarray
    kappa: float
    parameterization: str
    _precision: float = field(init=False)

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValidationError("inference requires kappa > 0")
        self.y = np.asarray(self.y, dtype=float)
        self._precision = 1.0 / self.kappa ** 2

    def to_f(self, x):
        return self.backend.inv(x) if self.parameterization == "non-centered" else x

    def logp_and_grad(self, x):
        if self.parameterization == "centered":
            r = self.y - x
            lp = self.backend.lpdf(x) - 0.5 * self._precision * r @ r
            return lp, self.backend.lpdf_grad(x) + self._precision * r
        f = self.backend.inv(x)
        r = self.y - f
        lp = -0.5 * x @ x - 0.5 * self._precision * r @ r
        return lp, -x + self.backend.inv_adjoint(self._precision * r)
