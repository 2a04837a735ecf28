"""Metropolis sampler of the circular Coulomb gas, used only as an oracle.

Target density ``exp(-beta H)`` with ``H = -sum_{m<n} log|e^{iE_m} - e^{iE_n}|``.
Many independent chains are advanced together; each sweep proposes a von Mises
step for every particle in turn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

TARGET_ACCEPTANCE = 0.5


@dataclass
class McmcResult:
    phases: np.ndarray  # (n_configs, d), each row sorted in (-pi, pi]
    acceptance: float
    step: float
    warning: str | None = None


def wrap_phase(x):
    """Map angles onto ``(-pi, pi]``."""
    return np.pi - np.mod(np.pi - x, 2 * np.pi)


def coulomb_energy(phases: np.ndarray) -> np.ndarray:
    """``H`` for one configuration (1-d) or a batch (rows)."""
    E = np.atleast_2d(phases)
    diff = E[:, :, None] - E[:, None, :]
    iu = np.triu_indices(E.shape[1], 1)
    with np.errstate(divide="ignore"):
        logs = np.log(2 * np.abs(np.sin(diff[:, iu[0], iu[1]] / 2)))
    H = -logs.sum(axis=1)
    return H if np.ndim(phases) > 1 else H[0]


def _pair_log(E_i: np.ndarray, E: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(2 * np.abs(np.sin((E_i[:, None] - E) / 2)))


def _sweep(E, beta, step, rng):
    n_chains, d = E.shape
    accepted = 0
    kappa = 1.0 / step**2
    for i in range(d):
        old = E[:, i]
        new = wrap_phase(old + rng.vonmises(0.0, kappa, n_chains))
        others = np.delete(E, i, axis=1)
        # Delta H = -sum_j [log|new - E_j| - log|old - E_j|]
        dH = -(_pair_log(new, others).sum(axis=1) - _pair_log(old, others).sum(axis=1))
        if beta == 0:
            log_ratio = np.zeros(n_chains)
        else:
            with np.errstate(invalid="ignore"):
                log_ratio = -beta * dH
            log_ratio = np.where(np.isnan(log_ratio), -np.inf, log_ratio)
        acc = np.log(1.0 - rng.random(n_chains)) < log_ratio
        E[acc, i] = new[acc]
        accepted += int(acc.sum())
    return accepted / (n_chains * d)


def mcmc_coulomb_chains(
    d: int,
    beta: float,
    rng: np.random.Generator,
    n_chains: int,
    samples_per_chain: int = 1,
    burn_in: int = 1000,
    thin: int = 10,
    step: float = 0.5,
    adapt_every: int = 10,
) -> McmcResult:
    """Run ``n_chains`` chains; keep ``samples_per_chain`` configurations from each.

    The step is tuned towards 50% acceptance during burn-in only, then frozen.
    Acceptance outside (0.1, 0.9) after burn-in is reported in ``warning``.
    """
    if d < 2:
        raise ParameterError(f"need d >= 2 particles, got {d}")
    if beta < 0:
        raise ParameterError(f"beta must be non-negative, got {beta}")
    E = np.sort(np.pi - 2 * np.pi * rng.random((n_chains, d)), axis=1)
    window = []
    for sweep in range(burn_in):
        window.append(_sweep(E, beta, step, rng))
        if (sweep + 1) % adapt_every == 0:
            rate = float(np.mean(window))
            step = float(np.clip(step * np.exp(2.0 * (rate - TARGET_ACCEPTANCE)), 1e-4, np.pi))
            window.clear()
    kept, rates = [], []
    for _ in range(samples_per_chain):
        for _ in range(thin):
            rates.append(_sweep(E, beta, step, rng))
        kept.append(np.sort(E, axis=1))
    acceptance = float(np.mean(rates)) if rates else float("nan")
    warning = None
    if not 0.1 < acceptance < 0.9:
        warning = f"acceptance {acceptance:.3f} outside (0.1, 0.9)"
    phases = np.stack(kept, axis=1).reshape(-1, d)
    return McmcResult(phases, acceptance, step, warning)


def mcmc_coulomb_sample(d: int, beta: float, rng: np.random.Generator, sweeps: int) -> McmcResult:
    """A single configuration after ``sweeps`` sweeps (burn-in plus one thinning interval)."""
    thin = min(10, sweeps)
    return mcmc_coulomb_chains(d, beta, rng, n_chains=1, burn_in=sweeps - thin, thin=thin)


def circular_spacings(phases: np.ndarray) -> np.ndarray:
    """Nearest-neighbour spacings around the circle for each row (``d`` per row)."""
    E = np.sort(np.atleast_2d(phases), axis=1)
    gaps = np.diff(E, axis=1)
    wrap = 2 * np.pi - (E[:, -1] - E[:, 0])
    return np.concatenate([gaps, wrap[:, None]], axis=1)
