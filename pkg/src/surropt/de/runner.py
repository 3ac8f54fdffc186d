"""Uniform run interface over the ten optimizer variants.

Every run draws all randomness from one seeded generator, repairs every
candidate into the box before evaluation, stops exactly when the
evaluation budget is consumed, and records the best-so-far fitness after
each evaluation.
"""

from __future__ import annotations

import numpy as np

from ..objective import BoundedObjective, clamp
from .base import ALL_VARIANTS, DEConfig, Individual, RunTrace, VariantId
from .dcmaea import dcmaea_init, dcmaea_step
from .operators import (
    ShadeMemory,
    crossover_binomial,
    init_population,
    jade_mutation,
    mutate_best1,
    mutate_rand1,
    degl_mutation,
    opposition_point,
    rank_selection_probabilities,
    sample_scale_cauchy,
    select_greedy,
    shade_sample_params,
    shade_update_memory,
    similarity_mutation,
    speciation_partition,
)


class _BudgetExhausted(Exception):
    """Internal signal: the evaluation budget is spent."""


class _RunState:
    """Budget-tracked evaluation wrapper shared by all variant loops."""

    def __init__(self, objective: BoundedObjective, cfg: DEConfig):
        self.objective = objective
        self.cfg = cfg
        self.used = 0
        self.best_fitness = np.inf
        self.best_x: np.ndarray | None = None
        self.trace: list[float] = []

    def evaluate(self, x: np.ndarray) -> tuple[np.ndarray, float]:
        if self.used >= self.cfg.max_evals:
            raise _BudgetExhausted
        x = clamp(self.objective.space, x)
        fitness = self.objective.evaluate(x)
        self.used += 1
        if fitness < self.best_fitness:
            self.best_fitness = fitness
            self.best_x = x.copy()
        self.trace.append(self.best_fitness)
        return x, fitness


def _generation_rand1(pop, cfg, rng, state, mutate):
    """Synchronous generation: donors come from the start-of-generation population."""
    survivors = []
    for i, target in enumerate(pop):
        donor = mutate(pop, i, cfg.scale_factor, rng)
        trial_x = crossover_binomial(target.x, donor, cfg.crossover_prob, rng)
        trial_x, trial_fit = state.evaluate(trial_x)
        survivors.append(select_greedy(target, Individual(trial_x, trial_fit)))
    return survivors


def _loop_derand(pop, cfg, rng, state):
    while True:
        pop = _generation_rand1(pop, cfg, rng, state, mutate_rand1)


def _loop_debest(pop, cfg, rng, state):
    while True:
        pop = _generation_rand1(pop, cfg, rng, state, mutate_best1)


def _loop_desps(pop, cfg, rng, state):
    size_cap = int(cfg.variant_params.get("species_size", max(4, cfg.pop_size // 2)))
    while True:
        species = speciation_partition(pop, size_cap=size_cap)
        survivors: list[Individual | None] = [None] * len(pop)
        for members in species:
            # donors stay within the species; tiny species borrow from everyone
            pool_idx = members if len(members) >= 4 else list(range(len(pop)))
            pool = [pop[j] for j in pool_idx]
            for i in members:
                local_target = pool_idx.index(i)
                donor = mutate_rand1(pool, local_target, cfg.scale_factor, rng)
                trial_x = crossover_binomial(pop[i].x, donor, cfg.crossover_prob, rng)
                trial_x, trial_fit = state.evaluate(trial_x)
                survivors[i] = select_greedy(pop[i], Individual(trial_x, trial_fit))
        pop = survivors


def _trim_archive(archive, limit, rng):
    while len(archive) > limit:
        archive.pop(int(rng.integers(len(archive))))


def _loop_shade(pop, cfg, rng, state):
    n = len(pop)
    memory = ShadeMemory(size=int(cfg.variant_params.get("memory_size", 10)))
    archive: list[Individual] = []
    p_min = 2.0 / n
    p_max = max(p_min, 0.2)
    while True:
        survivors = []
        success_f, success_cr, improvements = [], [], []
        for i, target in enumerate(pop):
            f_i, cr_i = shade_sample_params(memory, rng)
            p_i = rng.uniform(p_min, p_max)
            donor = jade_mutation(pop, archive, i, f_i, p_i, rng)
            trial_x = crossover_binomial(target.x, donor, cr_i, rng)
            trial_x, trial_fit = state.evaluate(trial_x)
            trial = Individual(trial_x, trial_fit)
            if trial_fit < target.fitness:
                success_f.append(f_i)
                success_cr.append(cr_i)
                improvements.append(target.fitness - trial_fit)
                archive.append(target)
            survivors.append(select_greedy(target, trial))
        _trim_archive(archive, n, rng)
        shade_update_memory(memory, success_f, success_cr, improvements)
        pop = survivors


def _loop_jade(pop, cfg, rng, state):
    n = len(pop)
    p = float(cfg.variant_params.get("p_best_fraction", 0.1))
    c = float(cfg.variant_params.get("adaptation_rate", 0.1))
    mu_f, mu_cr = 0.5, 0.5
    archive: list[Individual] = []
    while True:
        survivors = []
        success_f, success_cr = [], []
        for i, target in enumerate(pop):
            f_i = sample_scale_cauchy(mu_f, 0.1, rng)
            cr_i = float(np.clip(rng.normal(mu_cr, 0.1), 0.0, 1.0))
            donor = jade_mutation(pop, archive, i, f_i, p, rng)
            trial_x = crossover_binomial(target.x, donor, cr_i, rng)
            trial_x, trial_fit = state.evaluate(trial_x)
            trial = Individual(trial_x, trial_fit)
            if trial_fit < target.fitness:
                success_f.append(f_i)
                success_cr.append(cr_i)
                archive.append(target)
            survivors.append(select_greedy(target, trial))
        _trim_archive(archive, n, rng)
        if success_f:
            f_arr = np.array(success_f)
            mu_f = (1.0 - c) * mu_f + c * float((f_arr**2).sum() / f_arr.sum())
            mu_cr = (1.0 - c) * mu_cr + c * float(np.mean(success_cr))
        pop = survivors


def _loop_rbde(pop, cfg, rng, state):
    while True:
        probs = rank_selection_probabilities(pop)
        survivors = []
        for i, target in enumerate(pop):
            # base and difference head are rank-biased, the tail is uniform
            candidates = [j for j in range(len(pop)) if j != i]
            cand_p = probs[candidates] / probs[candidates].sum()
            r1, r2 = (candidates[int(k)] for k in rng.choice(len(candidates), size=2,
                                                             replace=False, p=cand_p))
            r3 = candidates[int(rng.integers(len(candidates)))]
            while r3 in (r1, r2):
                r3 = candidates[int(rng.integers(len(candidates)))]
            donor = pop[r1].x + cfg.scale_factor * (pop[r2].x - pop[r3].x)
            trial_x = crossover_binomial(target.x, donor, cfg.crossover_prob, rng)
            trial_x, trial_fit = state.evaluate(trial_x)
            survivors.append(select_greedy(target, Individual(trial_x, trial_fit)))
        pop = survivors


def _loop_degl(pop, cfg, rng, state):
    k = int(cfg.variant_params.get("neighborhood_k", 2))
    static_weight = cfg.variant_params.get("weight")
    n = len(pop)
    # default: weight rises linearly from local to global over the budget;
    # a fixed mid-range blend halves the difference-vector variance and
    # collapses small populations prematurely
    max_gens = max(1, (cfg.max_evals - n) // n)
    gen = 0
    while True:
        weight = float(static_weight) if static_weight is not None else min(1.0, gen / max_gens)
        survivors = []
        for i, target in enumerate(pop):
            donor = degl_mutation(pop, i, cfg.scale_factor, k, weight, rng)
            trial_x = crossover_binomial(target.x, donor, cfg.crossover_prob, rng)
            trial_x, trial_fit = state.evaluate(trial_x)
            survivors.append(select_greedy(target, Individual(trial_x, trial_fit)))
        pop = survivors
        gen += 1


def _loop_desim(pop, cfg, rng, state):
    while True:
        pop = _generation_rand1(pop, cfg, rng, state, similarity_mutation)


def _loop_dcmaea(pop, cfg, rng, state):
    space = state.objective.space
    sigma0 = float(cfg.variant_params.get("initial_sigma_fraction", 0.3)) * float(
        np.mean(space.upper - space.lower)
    )
    cma = dcmaea_init(pop, sigma0, cfg.scale_factor)
    while True:
        cma, offspring = dcmaea_step(cma, pop, state.evaluate, rng)
        pop = [select_greedy(target, child) for target, child in zip(pop, offspring)]


def _select_fittest(union: list[Individual], n: int) -> list[Individual]:
    order = sorted(range(len(union)), key=lambda i: (union[i].fitness, i))
    return [union[i] for i in order[:n]]


def _loop_obde(pop, cfg, rng, state):
    space = state.objective.space
    jumping_rate = float(cfg.variant_params.get("jumping_rate", 0.3))

    # opposition-based refinement of the initial population
    opposite = []
    for ind in pop:
        x, fit = state.evaluate(opposition_point(space, ind.x))
        opposite.append(Individual(x, fit))
    pop = _select_fittest(pop + opposite, cfg.pop_size)

    while True:
        pop = _generation_rand1(pop, cfg, rng, state, mutate_rand1)
        if rng.random() < jumping_rate:
            # generation jumping against the population's own bounding box
            xs = np.stack([ind.x for ind in pop])
            low, high = xs.min(axis=0), xs.max(axis=0)
            jumped = []
            for ind in pop:
                x, fit = state.evaluate(low + high - ind.x)
                jumped.append(Individual(x, fit))
            pop = _select_fittest(pop + jumped, cfg.pop_size)


_LOOPS = {
    VariantId.DERAND: _loop_derand,
    VariantId.DEBEST: _loop_debest,
    VariantId.DESPS: _loop_desps,
    VariantId.SHADE: _loop_shade,
    VariantId.RBDE: _loop_rbde,
    VariantId.JADE: _loop_jade,
    VariantId.DEGL: _loop_degl,
    VariantId.DESIM: _loop_desim,
    VariantId.DCMAEA: _loop_dcmaea,
    VariantId.OBDE: _loop_obde,
}

assert set(_LOOPS) == set(ALL_VARIANTS)


def run(variant: VariantId | str, objective: BoundedObjective, cfg: DEConfig) -> RunTrace:
    """Run one variant until the evaluation budget is spent.

    The returned trace has one best-so-far entry per objective evaluation
    and is bit-identical across reruns with the same (variant, seed, cfg,
    objective).
    """
    variant = VariantId(variant)
    rng = np.random.default_rng(cfg.seed)
    state = _RunState(objective, cfg)
    try:
        pop = init_population(cfg, objective.space, rng, state.evaluate)
        _LOOPS[variant](pop, cfg, rng, state)
    except _BudgetExhausted:
        pass
    return RunTrace(
        best_so_far=np.array(state.trace),
        best_x=state.best_x,
        variant=variant,
        seed=cfg.seed,
    )
