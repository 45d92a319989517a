"""Benchmark problems, samplers and evaluation for the GP backends."""

from .benchmark import (
    conjugate_posterior,
    fit_slopes,
    run_mcmc,
    scaling_benchmark,
    scaling_csv,
    simulate_benchmark,
    worker_count,
)
from .counts import (
    CountFitResult,
    gaussian_filter_estimate,
    masked_count_fit,
    simulate_count_grid,
    smse,
)
from .mcmc import ChainResult, batch_means, hmc
from .models import BACKENDS, PARAMETERIZATIONS, BenchmarkConfig, make_backend
