"""Hybrid of difference-vector mutation and covariance matrix adaptation.

Offspring are sampled from an adapted Gaussian N(mean, sigma^2 C), each
perturbed by a scaled difference of two population members:

    x_k = mean + sigma * (C^{1/2} z_k + F (x_r1 - x_r2)),   z_k ~ N(0, I)

so the difference vectors steer the search distribution while the global
step size controls their magnitude (with sigma = 0 all offspring collapse
onto the mean). After ranking the offspring, the mean, both evolution
paths, the covariance (rank-one plus rank-mu) and the step size are
updated with the standard cumulative adaptation rules.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .base import Individual

logger = logging.getLogger(__name__)

_EIG_FLOOR_RATIO = 1e-12


@dataclass
class DcmaeaState:
    mean: np.ndarray
    sigma: float
    cov: np.ndarray
    path_sigma: np.ndarray
    path_cov: np.ndarray
    de_scale: float
    generation: int = 0
    repairs: int = field(default=0)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def dcmaea_init(pop: list[Individual], sigma: float, de_scale: float) -> DcmaeaState:
    """Start from the best population member with an isotropic distribution."""
    best = min(pop, key=lambda ind: ind.fitness)
    dim = best.x.shape[0]
    return DcmaeaState(
        mean=best.x.copy(),
        sigma=float(sigma),
        cov=np.eye(dim),
        path_sigma=np.zeros(dim),
        path_cov=np.zeros(dim),
        de_scale=float(de_scale),
    )


def _sqrt_and_invsqrt(state: DcmaeaState) -> tuple[np.ndarray, np.ndarray]:
    """Symmetrize the covariance, floor tiny eigenvalues, return C^1/2, C^-1/2."""
    cov = 0.5 * (state.cov + state.cov.T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    floor = max(eigvals.max(), 0.0) * _EIG_FLOOR_RATIO + 1e-300
    if (eigvals < floor).any():
        state.repairs += 1
        logger.warning(
            "covariance repaired by eigenvalue flooring (generation %d, min eig %.3e)",
            state.generation, eigvals.min(),
        )
        eigvals = np.maximum(eigvals, floor)
    state.cov = (eigvecs * eigvals) @ eigvecs.T
    sqrt_c = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    invsqrt_c = (eigvecs / np.sqrt(eigvals)) @ eigvecs.T
    return sqrt_c, invsqrt_c


def dcmaea_step(state: DcmaeaState, pop: list[Individual], evaluate,
                rng: np.random.Generator) -> tuple[DcmaeaState, list[Individual]]:
    """One generation: sample, evaluate, adapt. Returns the evaluated offspring.

    `evaluate` maps a raw point to an (in-bounds point, fitness) pair and is
    expected to enforce the evaluation budget.
    """
    n = state.dim
    lam = len(pop)
    sqrt_c, invsqrt_c = _sqrt_and_invsqrt(state)

    offspring: list[Individual] = []
    for _ in range(lam):
        z = rng.standard_normal(n)
        r1, r2 = rng.choice(lam, size=2, replace=False)
        diff = state.de_scale * (pop[int(r1)].x - pop[int(r2)].x)
        x = state.mean + state.sigma * (sqrt_c @ z + diff)
        x, fit = evaluate(x)
        offspring.append(Individual(x, fit))

    # recombination weights over the better half
    mu = lam // 2
    raw_w = np.log(lam / 2 + 0.5) - np.log(np.arange(1, mu + 1))
    weights = raw_w / raw_w.sum()
    mu_eff = 1.0 / np.sum(weights**2)

    c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0)
    d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0) + c_sigma
    c_cov_path = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n)
    c_one = 2.0 / ((n + 1.3) ** 2 + mu_eff)
    c_mu = min(1.0 - c_one, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) ** 2 + mu_eff))
    chi_n = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n**2))

    order = sorted(range(lam), key=lambda k: (offspring[k].fitness, k))
    selected = np.stack([offspring[order[k]].x for k in range(mu)])
    old_mean = state.mean
    new_mean = weights @ selected

    sigma = max(state.sigma, 1e-300)  # keep the degenerate sigma=0 state stable
    mean_shift = (new_mean - old_mean) / sigma
    state.path_sigma = (1.0 - c_sigma) * state.path_sigma + math.sqrt(
        c_sigma * (2.0 - c_sigma) * mu_eff
    ) * (invsqrt_c @ mean_shift)
    ps_norm = np.linalg.norm(state.path_sigma)
    h_sigma = ps_norm / math.sqrt(
        1.0 - (1.0 - c_sigma) ** (2.0 * (state.generation + 1))
    ) < (1.4 + 2.0 / (n + 1.0)) * chi_n
    state.path_cov = (1.0 - c_cov_path) * state.path_cov + (
        math.sqrt(c_cov_path * (2.0 - c_cov_path) * mu_eff) * mean_shift if h_sigma else 0.0
    )

    steps = (selected - old_mean) / sigma
    rank_mu = (weights[:, None] * steps).T @ steps
    delta_h = (1.0 - float(h_sigma)) * c_cov_path * (2.0 - c_cov_path)
    state.cov = (
        (1.0 - c_one - c_mu) * state.cov
        + c_one * (np.outer(state.path_cov, state.path_cov) + delta_h * state.cov)
        + c_mu * rank_mu
    )
    state.cov = 0.5 * (state.cov + state.cov.T)

    # exponent capped at 1 so a repaired (near-singular) covariance cannot
    # blow the step size up in a single generation
    state.sigma = state.sigma * math.exp(min(1.0, (c_sigma / d_sigma) * (ps_norm / chi_n - 1.0)))
    state.mean = new_mean
    state.generation += 1
    return state, offspring
