"""Hamiltonian Monte Carlo with dual-averaged step size and batch-means diagnostics."""

import math
import time
from dataclasses import dataclass

import numpy as np

from ..exceptions import BudgetExceeded, ValidationError

#: Energy error beyond which a trajectory counts as divergent.
DIVERGENCE_THRESHOLD = 1000.0
#: Fraction of divergent transitions that flags a chain.
DIVERGENCE_FLAG_FRACTION = 0.05


def batch_means(draws):
    """Batch-means estimates for each column of ``draws``.

    Uses ``ceil(sqrt(N))`` batches of equal size; trailing draws that do not
    fill a batch are dropped. Returns ``(ess, mcse)``, the effective sample
    size (clipped to ``(0, N]``) and the Monte Carlo standard error of the
    mean.
    """
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 1:
        draws = draws[:, None]
    n = draws.shape[0]
    if n < 4:
        raise ValidationError(f"need at least 4 draws for batch means, got {n}")
    n_batches = math.ceil(math.sqrt(n))
    size = n // n_batches
    if size < 1:
        raise ValidationError("too few draws per batch")
    used = draws[:n_batches * size]
    means = used.reshape(n_batches, size, -1).mean(axis=1)
    # asymptotic variance of the chain average, scaled to one draw
    sigma2 = size * means.var(axis=0, ddof=1)
    var = draws.var(axis=0, ddof=1)
    tiny = np.finfo(float).tiny
    with np.errstate(over="ignore"):
        ess = np.clip(n * var / np.maximum(sigma2, tiny), tiny, n)
    mcse = np.sqrt(sigma2 / n)
    return ess, mcse


@dataclass
class ChainResult:
    """Output of a single HMC chain."""

    draws: np.ndarray
    f_draws: np.ndarray
    acceptance_rate: float
    step_size: float
    wall_time: float
    divergences: int

    @property
    def n_draws(self):
        return self.draws.shape[0]

    @property
    def divergent_fraction(self):
        return self.divergences / self.n_draws

    @property
    def flagged(self):
        return self.divergent_fraction > DIVERGENCE_FLAG_FRACTION

    @property
    def ess(self):
        """Per-dimension ESS of the latent function values."""
        return batch_means(self.f_draws)[0]

    @property
    def mcse(self):
        return batch_means(self.f_draws)[1]

    def summary(self):
        ess, mcse = batch_means(self.f_draws)
        return {
            "n_draws": self.n_draws,
            "acceptance_rate": self.acceptance_rate,
            "step_size": self.step_size,
            "wall_time": self.wall_time,
            "divergences": self.divergences,
            "flagged": bool(self.flagged),
            "ess": ess.tolist(),
            "min_ess": float(ess.min()),
            "posterior_mean": self.f_draws.mean(axis=0).tolist(),
            "posterior_sd": self.f_draws.std(axis=0, ddof=1).tolist(),
            "mcse": mcse.tolist(),
        }


class DualAveraging:
    """Step-size adaptation towards a target acceptance probability."""

    def __init__(self, step_size, target=0.8, gamma=0.05, t0=10.0, kappa=0.75):
        self.mu = math.log(10 * step_size)
        self.target, self.gamma, self.t0, self.kappa = target, gamma, t0, kappa
        self.t = 0
        self.h_bar = 0.0
        self.log_step = math.log(step_size)
        self.log_step_bar = 0.0

    def update(self, accept_prob):
        self.t += 1
        eta = 1.0 / (self.t + self.t0)
        self.h_bar = (1 - eta) * self.h_bar + eta * (self.target - accept_prob)
        self.log_step = self.mu - math.sqrt(self.t) / self.gamma * self.h_bar
        w = self.t ** -self.kappa
        self.log_step_bar = w * self.log_step + (1 - w) * self.log_step_bar
        return math.exp(self.log_step)

    @property
    def final_step_size(self):
        return math.exp(self.log_step_bar)


def leapfrog(logp_and_grad, x, p, grad, step_size, n_steps):
    p = p + 0.5 * step_size * grad
    for i in range(n_steps):
        x = x + step_size * p
        lp, grad = logp_and_grad(x)
        if not np.isfinite(lp):
            return x, p, -np.inf, grad
        if i < n_steps - 1:
            p = p + step_size * grad
    p = p + 0.5 * step_size * grad
    return x, p, lp, grad


def _initial_step_size(logp_and_grad, x, lp, grad, rng):
    """Double or halve the step until a single leapfrog step accepts with probability near 1/2."""
    step = 1.0
    p = rng.standard_normal(x.shape)
    h0 = lp - 0.5 * np.sum(p * p)

    def log_ratio(step):
        _, p1, lp1, _ = leapfrog(logp_and_grad, x, p, grad, step, 1)
        h = lp1 - 0.5 * np.sum(p1 * p1)
        return h - h0 if np.isfinite(h) else -np.inf

    direction = 1 if log_ratio(step) > math.log(0.5) else -1
    for _ in range(50):
        ratio = log_ratio(step)
        if (direction == 1 and not ratio > math.log(0.5)) or (direction == -1 and ratio > math.log(0.5)):
            break
        step *= 2.0 ** direction
    return step


def hmc(logp_and_grad, x0, n_warmup=500, n_draws=500, n_steps=16, random_path=True,
        target_accept=0.8, step_jitter=0.2, rng=None, to_f=None, budget_seconds=None):
    """Sample with static-trajectory HMC, adapting the step size during warmup.

    Parameters
    ----------
    logp_and_grad : callable
        Returns the log density and its gradient at a state.
    x0 : ndarray
        Initial state.
    n_steps : int
        Leapfrog steps per trajectory, or the maximum if ``random_path``.
    random_path : bool
        Draw the number of steps uniformly from ``1..n_steps`` for each
        trajectory. With a fixed count, trajectories in near-isotropic
        posteriors can span a whole oscillation period and barely move.
    step_jitter : float
        Each trajectory draws its step size uniformly within this relative
        band around the adapted value.
    to_f : callable, optional
        Maps states to latent function values recorded in ``f_draws``.
    budget_seconds : float, optional
        Raises :class:`~gpscale.exceptions.BudgetExceeded` when exceeded.
    """
    rng = np.random.default_rng(rng)
    to_f = to_f or (lambda x: x)
    start = time.perf_counter()
    x = np.array(x0, dtype=float)
    lp, grad = logp_and_grad(x)
    step = _initial_step_size(logp_and_grad, x, lp, grad, rng)
    adapt = DualAveraging(step, target_accept)
    draws = np.empty((n_draws,) + x.shape)
    f_draws = None
    accepted = 0
    divergences = 0
    for it in range(n_warmup + n_draws):
        if budget_seconds is not None and time.perf_counter() - start > budget_seconds:
            raise BudgetExceeded(f"HMC exceeded {budget_seconds} s after {it} iterations")
        eps = step * rng.uniform(1 - step_jitter, 1 + step_jitter)
        p = rng.standard_normal(x.shape)
        h0 = lp - 0.5 * np.sum(p * p)
        steps = int(rng.integers(1, n_steps + 1)) if random_path else n_steps
        x1, p1, lp1, grad1 = leapfrog(logp_and_grad, x, p, grad, eps, steps)
        h1 = lp1 - 0.5 * np.sum(p1 * p1)
        log_alpha = h1 - h0 if np.isfinite(h1) else -np.inf
        accept_prob = math.exp(min(0.0, log_alpha))
        if rng.uniform() < accept_prob:
            x, lp, grad = x1, lp1, grad1
            accepted += it >= n_warmup
        if it < n_warmup:
            step = adapt.update(accept_prob)
            if it == n_warmup - 1:
                step = adapt.final_step_size
        else:
            divergences += -log_alpha > DIVERGENCE_THRESHOLD
            draws[it - n_warmup] = x
            f = to_f(x)
            if f_draws is None:
                f_draws = np.empty((n_draws,) + np.shape(f))
            f_draws[it - n_warmup] = f
    return ChainResult(
        draws=draws,
        f_draws=f_draws,
        acceptance_rate=accepted / n_draws,
        step_size=step,
        wall_time=time.perf_counter() - start,
        divergences=int(divergences),
    )
