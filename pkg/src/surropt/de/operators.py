"""Primitive operators used by the differential evolution variants.

Population arguments are lists of `Individual`. All randomness flows
through an explicit numpy Generator, so operator calls are reproducible.
"""

from __future__ import annotations

import math

import numpy as np

from ..objective import SearchSpace
from ..util import midranks
from .base import DEConfig, Individual


def _pick_distinct(rng: np.random.Generator, n: int, k: int, exclude: set[int]) -> list[int]:
    candidates = [i for i in range(n) if i not in exclude]
    if len(candidates) < k:
        raise ValueError(f"population too small: need {k} distinct donors, have {len(candidates)}")
    chosen = rng.choice(len(candidates), size=k, replace=False)
    return [candidates[int(i)] for i in chosen]


def init_population(cfg: DEConfig, space: SearchSpace, rng: np.random.Generator, evaluate) -> list[Individual]:
    """Uniform population over the box; every member evaluated on creation."""
    if cfg.pop_size < 4:
        raise ValueError(f"pop_size must be >= 4, got {cfg.pop_size}")
    pop = []
    for _ in range(cfg.pop_size):
        x = rng.uniform(space.lower, space.upper)
        x, fit = evaluate(x)
        pop.append(Individual(x, fit))
    return pop


def mutate_rand1(pop: list[Individual], target_idx: int, f_scale: float,
                 rng: np.random.Generator) -> np.ndarray:
    """Donor x_r1 + F (x_r2 - x_r3) with r1, r2, r3 distinct and != target."""
    if len(pop) < 4:
        raise ValueError(f"rand/1 mutation needs at least 4 individuals, got {len(pop)}")
    r1, r2, r3 = _pick_distinct(rng, len(pop), 3, {target_idx})
    return pop[r1].x + f_scale * (pop[r2].x - pop[r3].x)


def mutate_best1(pop: list[Individual], target_idx: int, f_scale: float,
                 rng: np.random.Generator) -> np.ndarray:
    """Donor x_best + F (x_r1 - x_r2) with r1 != r2, both != target."""
    if len(pop) < 4:
        raise ValueError(f"best/1 mutation needs at least 4 individuals, got {len(pop)}")
    best = min(range(len(pop)), key=lambda i: pop[i].fitness)
    r1, r2 = _pick_distinct(rng, len(pop), 2, {target_idx})
    return pop[best].x + f_scale * (pop[r1].x - pop[r2].x)


def crossover_binomial(target: np.ndarray, donor: np.ndarray, cr: float,
                       rng: np.random.Generator) -> np.ndarray:
    """Binomial crossover; index j_rand always takes the donor component."""
    target = np.asarray(target, dtype=float)
    donor = np.asarray(donor, dtype=float)
    if target.shape != donor.shape:
        raise ValueError(f"dimension mismatch: target {target.shape}, donor {donor.shape}")
    mask = rng.random(target.shape[0]) < cr
    mask[rng.integers(target.shape[0])] = True
    return np.where(mask, donor, target)


def select_greedy(target: Individual, trial: Individual) -> Individual:
    """Survivor selection; ties go to the trial (keeps drift on plateaus)."""
    if not (target.evaluated and trial.evaluated):
        raise ValueError("both individuals must be evaluated before selection")
    return trial if trial.fitness <= target.fitness else target


def opposition_point(space: SearchSpace, x: np.ndarray) -> np.ndarray:
    """Bound-reflected point lower + upper - x."""
    x = np.asarray(x, dtype=float)
    if not space.contains(x):
        raise ValueError("x is outside the search space")
    return space.lower + space.upper - x


def rank_selection_probabilities(pop: list[Individual]) -> np.ndarray:
    """Donor-selection probabilities from linear fitness ranking.

    Best individual gets weight N, worst gets 1 (ties share midranks);
    weights are normalized to sum to 1.
    """
    if not pop:
        raise ValueError("population is empty")
    fitness = np.array([ind.fitness for ind in pop], dtype=float)
    n = len(pop)
    weights = n - midranks(fitness) + 1.0
    return weights / weights.sum()


def sample_scale_cauchy(loc: float, scale: float, rng: np.random.Generator) -> float:
    """Cauchy draw around `loc`, truncated to 1 above and resampled while <= 0."""
    while True:
        value = loc + scale * math.tan(math.pi * (rng.random() - 0.5))
        if value > 1.0:
            return 1.0
        if value > 0.0:
            return value


class ShadeMemory:
    """Cyclic success-history memory of (F, CR) location pairs."""

    def __init__(self, size: int = 10, init_f: float = 0.5, init_cr: float = 0.5):
        if size < 1:
            raise ValueError(f"memory size must be >= 1, got {size}")
        self.f_means = np.full(size, init_f)
        self.cr_means = np.full(size, init_cr)
        self.pos = 0

    def __len__(self) -> int:
        return len(self.f_means)


def shade_sample_params(memory: ShadeMemory, rng: np.random.Generator,
                        scale: float = 0.1) -> tuple[float, float]:
    """Per-individual (F, CR) drawn around a random memory cell.

    F comes from a Cauchy (resampled while <= 0, truncated at 1), CR from a
    Gaussian clipped to [0, 1].
    """
    if len(memory) == 0:
        raise ValueError("memory is empty")
    cell = int(rng.integers(len(memory)))
    f_value = memory.f_means[cell] if scale == 0.0 else sample_scale_cauchy(memory.f_means[cell], scale, rng)
    cr_value = float(np.clip(rng.normal(memory.cr_means[cell], scale), 0.0, 1.0))
    return float(f_value), cr_value


def shade_update_memory(memory: ShadeMemory, successful_f: list[float],
                        successful_cr: list[float], improvements: list[float]) -> ShadeMemory:
    """Overwrite one cell with improvement-weighted means of the successes.

    F uses the weighted Lehmer mean, CR the weighted arithmetic mean; the
    write position then advances cyclically. No successes, no update.
    """
    if not (len(successful_f) == len(successful_cr) == len(improvements)):
        raise ValueError("success lists must have equal length")
    if not successful_f:
        return memory
    f_arr = np.asarray(successful_f, dtype=float)
    cr_arr = np.asarray(successful_cr, dtype=float)
    w = np.asarray(improvements, dtype=float)
    total = w.sum()
    w = np.full_like(w, 1.0 / len(w)) if total <= 0 else w / total
    memory.f_means[memory.pos] = float(np.dot(w, f_arr**2) / np.dot(w, f_arr))
    memory.cr_means[memory.pos] = float(np.dot(w, cr_arr))
    memory.pos = (memory.pos + 1) % len(memory)
    return memory


def jade_mutation(pop: list[Individual], archive: list[Individual], target_idx: int,
                  f_scale: float, p: float, rng: np.random.Generator) -> np.ndarray:
    """current-to-pbest/1 donor with the terminal point drawn from pop + archive.

    v = x_i + F (x_pbest - x_i) + F (x_r1 - x_r2~), where x_pbest is uniform
    among the ceil(p*N) best and x_r2~ comes from the population-archive union.
    """
    n = len(pop)
    if n == 0:
        raise ValueError("population is empty")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    if n < 3:
        raise ValueError(f"current-to-pbest/1 needs at least 3 individuals, got {n}")
    fitness = np.array([ind.fitness for ind in pop], dtype=float)
    top = np.argsort(fitness, kind="stable")[: max(1, math.ceil(p * n))]
    pbest = pop[int(top[rng.integers(len(top))])]

    (r1,) = _pick_distinct(rng, n, 1, {target_idx})
    union = pop + archive
    r2 = int(rng.integers(len(union)))
    while r2 == target_idx or r2 == r1:
        r2 = int(rng.integers(len(union)))
    xi = pop[target_idx].x
    return xi + f_scale * (pbest.x - xi) + f_scale * (pop[r1].x - union[r2].x)


def _ring_neighborhood(i: int, k: int, n: int) -> list[int]:
    return [(i + off) % n for off in range(-k, k + 1)]


def _degl_models(pop: list[Individual], target_idx: int, f_scale: float,
                 neighborhood_k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """(global, local) donor models for the neighborhood-mixing mutation."""
    n = len(pop)
    if not 1 <= neighborhood_k < n / 2:
        raise ValueError(f"neighborhood size must satisfy 1 <= k < pop_size/2, got k={neighborhood_k}")
    fitness = np.array([ind.fitness for ind in pop], dtype=float)
    xi = pop[target_idx].x

    hood = _ring_neighborhood(target_idx, neighborhood_k, n)
    n_best = min(hood, key=lambda j: (fitness[j], j))
    local_pool = [j for j in hood if j != target_idx]
    p, q = [local_pool[int(c)] for c in rng.choice(len(local_pool), size=2, replace=False)]
    local = xi + f_scale * (pop[n_best].x - xi) + f_scale * (pop[p].x - pop[q].x)

    g_best = int(np.argmin(fitness))
    r1, r2 = _pick_distinct(rng, n, 2, {target_idx})
    global_ = xi + f_scale * (pop[g_best].x - xi) + f_scale * (pop[r1].x - pop[r2].x)
    return global_, local


def degl_mutation(pop: list[Individual], target_idx: int, f_scale: float,
                  neighborhood_k: int, weight: float, rng: np.random.Generator) -> np.ndarray:
    """Convex mix of a global (population-best) and local (ring-best) donor model."""
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"weight must be in [0, 1], got {weight}")
    global_, local = _degl_models(pop, target_idx, f_scale, neighborhood_k, rng)
    return weight * global_ + (1.0 - weight) * local


def speciation_partition(pop: list[Individual], radius: float | None = None,
                         size_cap: int | None = None) -> list[list[int]]:
    """Split the population into disjoint species around fitness-best seeds.

    The best unassigned individual seeds a new species; unassigned
    individuals join it nearest-first, while within `radius` of the seed
    (if given) and while the species holds fewer than `size_cap` members
    (if given). Every index ends up in exactly one species and each
    species' seed is its best member.
    """
    if not pop:
        raise ValueError("population is empty")
    if size_cap is not None and size_cap < 1:
        raise ValueError(f"size_cap must be >= 1, got {size_cap}")
    fitness = np.array([ind.fitness for ind in pop], dtype=float)
    xs = np.stack([ind.x for ind in pop])
    by_fitness = sorted(range(len(pop)), key=lambda i: (fitness[i], i))
    unassigned = set(range(len(pop)))
    species: list[list[int]] = []
    for seed in by_fitness:
        if seed not in unassigned:
            continue
        unassigned.discard(seed)
        members = [seed]
        others = sorted(unassigned, key=lambda j: (float(np.linalg.norm(xs[j] - xs[seed])), j))
        for j in others:
            if size_cap is not None and len(members) >= size_cap:
                break
            if radius is not None and np.linalg.norm(xs[j] - xs[seed]) > radius:
                break
            members.append(j)
            unassigned.discard(j)
        species.append(members)
    return species


def _similarity_weights(pop: list[Individual], target_idx: int) -> np.ndarray:
    """Donor weights over indices != target, decaying with distance to the target.

    w_j = exp(-d_j / mean(d)); a fully collapsed population gets uniform weights.
    """
    xs = np.stack([ind.x for ind in pop])
    dist = np.linalg.norm(xs - xs[target_idx], axis=1)
    dist = np.delete(dist, target_idx)
    mean = dist.mean()
    if mean == 0.0:
        weights = np.ones_like(dist)
    else:
        weights = np.exp(-dist / mean)
    return weights / weights.sum()


def similarity_mutation(pop: list[Individual], target_idx: int, f_scale: float,
                        rng: np.random.Generator) -> np.ndarray:
    """rand/1 donor with indices sampled proportionally to similarity weights."""
    n = len(pop)
    if n < 4:
        raise ValueError(f"similarity mutation needs at least 4 individuals, got {n}")
    candidates = [j for j in range(n) if j != target_idx]
    probs = _similarity_weights(pop, target_idx)
    picks = rng.choice(len(candidates), size=3, replace=False, p=probs)
    r1, r2, r3 = (candidates[int(i)] for i in picks)
    return pop[r1].x + f_scale * (pop[r2].x - pop[r3].x)
