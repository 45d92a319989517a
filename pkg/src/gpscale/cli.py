"""Command line interface: ``gpscale <command> [options]``.

Exit codes are 0 on success, 2 for invalid input and 3 when a time budget
truncated the work.
"""

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

import numpy as np

from . import kernels
from .exceptions import BudgetExceeded, UnsupportedParameterError, ValidationError
from .grid import MaskedGrid
from .harness import (
    BACKENDS,
    PARAMETERIZATIONS,
    BenchmarkConfig,
    fit_slopes,
    gaussian_filter_estimate,
    masked_count_fit,
    run_mcmc,
    scaling_benchmark,
    scaling_csv,
    simulate_benchmark,
    smse,
    worker_count,
)

EXIT_OK, EXIT_INVALID, EXIT_TRUNCATED = 0, 2, 3


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _emit(text, out):
    if out:
        with open(out, "w") as fp:
            fp.write(text)
    else:
        sys.stdout.write(text)


def _config(args, **extra):
    return BenchmarkConfig(
        n=args.n, kappa=args.kappa, sigma=args.sigma, ell=args.ell, backend=args.backend,
        parameterization=getattr(args, "parameterization", "non-centered"), q=args.q,
        seed=args.seed, budget_seconds=args.budget, **extra,
    )


def _csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_simulate(args):
    config = _config(args)
    f, y = simulate_benchmark(config)
    _emit(_csv(["x", "f", "y"], ((i, repr(float(a)), repr(float(b))) for i, (a, b) in enumerate(zip(f, y)))),
          args.out)
    return EXIT_OK


def cmd_bench_scaling(args):
    rows = scaling_benchmark(args.backends, args.sizes, repetitions=args.repetitions,
                             parameterization=args.parameterization, q=args.q,
                             budget_seconds=args.budget)
    _emit(scaling_csv(rows), args.out)
    slopes = fit_slopes(rows)
    print(json.dumps({"slopes": slopes}), file=sys.stderr)
    return EXIT_TRUNCATED if any(r["truncated"] for r in rows) else EXIT_OK


def cmd_mcmc(args):
    config = _config(args)
    _, y = simulate_benchmark(config)

    def chain(index):
        return run_mcmc(y, config, n_warmup=args.warmup, n_draws=args.draws, n_steps=args.steps,
                        rng=np.random.default_rng([args.seed, index]))

    workers = min(worker_count(), args.chains)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(chain, range(args.chains)))
    payload = {
        "config": asdict(config),
        "chains": [r.summary() for r in results],
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_fit_grid(args):
    grid = MaskedGrid.read(args.grid)
    result = masked_count_fit(
        grid, pad=args.pad, length_scale_bounds=(args.ell_min, args.ell_max), nu=args.nu,
        n_warmup=args.warmup, n_draws=args.draws, rng=args.seed,
    )
    payload = {
        "shape": list(grid.shape),
        "pad": list(result.pad),
        "median_f": result.median_f.tolist(),
        "hyperparameters": result.hyper_summary(),
        "hmc_acceptance": result.hmc_acceptance,
        "mh_acceptance": result.mh_acceptance,
        "wall_time": result.wall_time,
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_smse(args):
    observed = MaskedGrid.read(args.observed)
    latent = np.loadtxt(args.latent, delimiter=",", ndmin=2)
    if latent.shape != observed.shape:
        raise ValidationError(f"latent shape {latent.shape} does not match observed {observed.shape}")
    m = observed.mask
    payload = {"smse": smse(observed.values[m], latent[m]), "m": int(m.sum())}
    _emit(json.dumps(payload) + "\n", args.out)
    return EXIT_OK


def cmd_filter(args):
    grid = MaskedGrid.read(args.grid)
    estimate = gaussian_filter_estimate(grid, args.scale)
    buf = io.StringIO()
    np.savetxt(buf, estimate, delimiter=",", fmt="%.17g")
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_spectra(args):
    se = kernels.se_spectrum_1d(args.n, args.sigma, args.ell, args.period)
    matern = kernels.matern_spectrum_1d(args.n, args.nu, args.sigma, args.ell, args.period)
    se_row = kernels.periodic_kernel_row(se)
    matern_row = kernels.periodic_kernel_row(matern)
    half = args.n // 2 + 1
    rows = []
    for k in range(half):
        lag = k * args.period / args.n
        real_matern = ""
        if args.nu in kernels.REAL_DOMAIN_NU:
            real_matern = repr(float(kernels.matern_cov(lag, args.sigma, args.ell, args.nu)))
        rows.append((k, repr(lag), repr(float(se.values[k])), repr(float(matern.values[k])),
                     repr(float(se_row[k])), repr(float(matern_row[k])),
                     repr(float(kernels.se_cov(lag, args.sigma, args.ell))), real_matern))
    header = ["index", "lag", "se_power", "matern_power", "se_periodic", "matern_periodic",
              "se_standard", "matern_standard"]
    _emit(_csv(header, rows), args.out)
    return EXIT_OK


def _model_args(p, n=64):
    p.add_argument("--n", type=int, default=n, help="number of grid points")
    p.add_argument("--kappa", type=float, default=1.0, help="observation noise scale")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--ell", type=float, default=1.0)
    p.add_argument("--backend", choices=BACKENDS, default="fourier")
    p.add_argument("--q", type=int, default=5, help="nearest predecessors for the graph backend")
    p.add_argument("--budget", type=float, default=60.0, help="wall-clock budget in seconds")


def build_parser():
    parser = ArgumentParser(prog="gpscale", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path (default: stdout)")
        return p

    p = add("simulate", cmd_simulate, "draw benchmark data y ~ N(f, kappa^2)")
    _model_args(p)

    p = add("bench-scaling", cmd_bench_scaling, "time log density and gradient against n")
    p.add_argument("--backends", nargs="+", choices=BACKENDS, default=list(BACKENDS))
    p.add_argument("--sizes", nargs="+", type=int, default=[2 ** k for k in range(9, 13)])
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--parameterization", choices=PARAMETERIZATIONS, default="centered")
    p.add_argument("--q", type=int, default=5)
    p.add_argument("--budget", type=float, default=60.0, help="per-backend budget in seconds")

    p = add("mcmc", cmd_mcmc, "sample the benchmark posterior with fixed hyperparameters")
    _model_args(p)
    p.add_argument("--parameterization", choices=PARAMETERIZATIONS, default="non-centered")
    p.add_argument("--warmup", type=int, default=500)
    p.add_argument("--draws", type=int, default=500)
    p.add_argument("--steps", type=int, default=16, help="maximum leapfrog steps per trajectory")
    p.add_argument("--chains", type=int, default=1)

    p = add("fit-grid", cmd_fit_grid, "fit the negative-binomial GP model to a count grid")
    p.add_argument("grid", help="count CSV with -1 for missing cells (JSON sidecar optional)")
    p.add_argument("--pad", type=int, nargs=2, default=[10, 10])
    p.add_argument("--ell-min", type=float, default=2.0)
    p.add_argument("--ell-max", type=float, default=28.0)
    p.add_argument("--nu", type=float, default=1.5)
    p.add_argument("--warmup", type=int, default=500)
    p.add_argument("--draws", type=int, default=500)

    p = add("smse", cmd_smse, "scaled mean squared error of exp(latent) against counts")
    p.add_argument("observed", help="count CSV of test data with -1 for cells to ignore")
    p.add_argument("latent", help="CSV of the latent log mean on the same grid")

    p = add("filter", cmd_filter, "Gaussian filter estimate of a masked count grid")
    p.add_argument("grid")
    p.add_argument("--scale", type=float, required=True, help="smoothing scale in cells")

    p = add("spectra", cmd_spectra, "dump periodic kernel spectra and rows for plotting")
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--ell", type=float, default=0.2)
    p.add_argument("--period", type=float, default=1.0)
    p.add_argument("--nu", type=float, default=1.5)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, UnsupportedParameterError, OSError) as ex:
        print(f"gpscale: error: {ex}", file=sys.stderr)
        return EXIT_INVALID
    except BudgetExceeded as ex:
        print(f"gpscale: budget exceeded: {ex}", file=sys.stderr)
        return EXIT_TRUNCATED


if __name__ == "__main__":
    sys.exit(main())
