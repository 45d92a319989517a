"""Synthetic benchmark data, conjugate-posterior sampling and runtime scaling."""

import csv
import io
import math
import os
import time

import numpy as np

from .. import dense, fourier, graph
from ..exceptions import ValidationError
from ..kernels import Kernel, se_spectrum_1d
from .mcmc import hmc
from .models import BACKENDS, PARAMETERIZATIONS, NormalPosterior, make_backend


def worker_count():
    """Worker cap from ``GPSCALE_THREADS``, defaulting to the available cores."""
    value = os.environ.get("GPSCALE_THREADS")
    if value:
        try:
            count = int(value)
        except ValueError:
            raise ValidationError(f"GPSCALE_THREADS must be an integer, got {value!r}") from None
        if count < 1:
            raise ValidationError("GPSCALE_THREADS must be at least 1")
        return count
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def simulate_benchmark(config):
    """Draw ``f`` from the prior through the configured backend and ``y ~ N(f, kappa^2)``."""
    rng = np.random.default_rng(config.seed)
    backend = make_backend(config)
    f = backend.inv(rng.standard_normal(config.n))
    y = f + config.kappa * rng.standard_normal(config.n)
    return f, y


def run_mcmc(y, config, n_warmup=500, n_draws=500, n_steps=16, rng=None):
    """Sample ``f | y`` with hyperparameters fixed at the values in ``config``.

    The chain runs on ``f`` for the centered and on the white noise ``z`` for
    the non-centered parameterization; ``f_draws`` holds the latent function
    either way.
    """
    backend = make_backend(config)
    post = NormalPosterior(backend, y, config.kappa, config.parameterization)
    rng = np.random.default_rng(config.seed if rng is None else rng)
    x0 = np.zeros(config.n)
    return hmc(post.logp_and_grad, x0, n_warmup=n_warmup, n_draws=n_draws, n_steps=n_steps,
               rng=rng, to_f=post.to_f, budget_seconds=config.budget_seconds)


def conjugate_posterior(y, config):
    """Exact posterior mean and covariance of ``f`` under the backend's own prior.

    For the Fourier backend the prior is the circulant kernel; for the graph
    backend it is the covariance implied by the nearest-neighbor factorization.
    """
    backend = make_backend(config)
    gp = dense.CholeskyGp.from_cov(0.0, backend.prior_cov(), jitter=0.0)
    return dense.gp_regression_posterior(y, config.kappa, gp)


# ---------------------------------------------------------------------------
# runtime scaling


def _eval_factory(backend, n, parameterization, q=5, sigma=1.0, ell=1.0, seed=0):
    """Return a zero-argument callable evaluating the log density and its gradient.

    Kernel-dependent work (covariance, factorization, conditionals, spectrum)
    is included in every call because it must be redone whenever
    hyperparameters change during inference.
    """
    rng = np.random.default_rng(seed)
    x = np.arange(n, dtype=float)
    v = rng.standard_normal(n)
    kernel = Kernel.squared_exponential(sigma, ell)
    centered = parameterization == "centered"
    if backend == "dense":
        def run():
            gp = dense.CholeskyGp.from_kernel(kernel, x)
            if centered:
                return dense.dense_lpdf(v, gp), dense.dense_lpdf_grad(v, gp)
            return dense.dense_inv_transform(v, gp), dense.dense_inv_transform_adjoint(v, gp)
    elif backend == "graph":
        edges = graph.nearest_neighbor_graph(x, q)
        preds = graph.parse_edge_list(edges, n)

        def run():
            cond = graph.compute_conditionals(graph.DagGp(x[:, None], preds, kernel))
            if centered:
                return graph.conditional_lpdf(v, 0.0, cond), graph.conditional_lpdf_grad(v, 0.0, cond)
            sd = np.sqrt(cond.var)
            return cond.solve_residuals(sd * v), sd * cond.solve_residuals_adjoint(v)
    elif backend == "fourier":
        def run():
            spectrum = se_spectrum_1d(n, sigma, ell, n)
            if centered:
                return fourier.fourier_lpdf(v, 0.0, spectrum), fourier.fourier_lpdf_grad(v, 0.0, spectrum)
            return fourier.fourier_inv_transform(v, 0.0, spectrum), fourier.adjoint_inv_transform(v, spectrum)
    else:
        raise ValidationError(f"unknown backend {backend!r}")
    return run


def _time_call(run, repetitions, min_seconds=0.2):
    """Mean and sd of per-call wall time over ``repetitions`` samples.

    Calls faster than ``min_seconds`` are looped within each sample. For slow
    calls the first (warm-up) call already counts as a sample.
    """
    t = time.perf_counter()
    run()
    first = time.perf_counter() - t
    samples = []
    if first >= min_seconds:
        samples.append(first)
        inner = 1
    else:
        inner = max(1, int(min_seconds / max(first, 1e-9)))
    while len(samples) < repetitions:
        t = time.perf_counter()
        for _ in range(inner):
            run()
        samples.append((time.perf_counter() - t) / inner)
    samples = np.asarray(samples)
    sd = float(samples.std(ddof=1)) if samples.size > 1 else 0.0
    return float(samples.mean()), sd


def scaling_benchmark(backends, sizes, repetitions=3, parameterization="centered", q=5,
                      budget_seconds=60.0):
    """Time log density plus gradient for each backend and size.

    Sizes must be ascending. Once a backend has spent ``budget_seconds`` the
    remaining sizes are reported with ``truncated=True`` and no timing.
    Returns a list of row dicts with keys ``backend, n, parameterization,
    mean_seconds, sd_seconds, truncated``.
    """
    sizes = [int(n) for n in sizes]
    if sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise ValidationError(f"sizes must be strictly ascending, got {sizes}")
    if parameterization not in PARAMETERIZATIONS:
        raise ValidationError(f"unknown parameterization {parameterization!r}")
    rows = []
    for backend in backends:
        if backend not in BACKENDS:
            raise ValidationError(f"unknown backend {backend!r}")
        spent = 0.0
        for n in sizes:
            row = {"backend": backend, "n": n, "parameterization": parameterization}
            if spent > budget_seconds:
                rows.append(dict(row, mean_seconds=math.nan, sd_seconds=math.nan, truncated=True))
                continue
            start = time.perf_counter()
            mean, sd = _time_call(_eval_factory(backend, n, parameterization, q=q), repetitions)
            spent += time.perf_counter() - start
            rows.append(dict(row, mean_seconds=mean, sd_seconds=sd, truncated=False))
    return rows


def fit_slopes(rows):
    """Least-squares log-log slope of mean time against ``n`` for each backend."""
    slopes = {}
    for backend in dict.fromkeys(r["backend"] for r in rows):
        pts = [(r["n"], r["mean_seconds"]) for r in rows if r["backend"] == backend and not r["truncated"]]
        if len(pts) < 2:
            slopes[backend] = math.nan
            continue
        n, t = np.log(np.array(pts)).T
        slopes[backend] = float(np.polyfit(n, t, 1)[0])
    return slopes


SCALING_COLUMNS = ("backend", "n", "parameterization", "mean_seconds", "sd_seconds", "truncated")


def scaling_csv(rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SCALING_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row[k] for k in SCALING_COLUMNS})
    return buf.getvalue()
