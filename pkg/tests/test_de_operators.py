import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from surropt.de import (
    DEConfig,
    Individual,
    ShadeMemory,
    crossover_binomial,
    degl_mutation,
    init_population,
    jade_mutation,
    mutate_best1,
    mutate_rand1,
    opposition_point,
    rank_selection_probabilities,
    select_greedy,
    shade_sample_params,
    shade_update_memory,
    similarity_mutation,
    speciation_partition,
)
from surropt.de.operators import _degl_models, _similarity_weights
from surropt.objective import SearchSpace


def pop_from(points, fitness=None):
    fitness = fitness if fitness is not None else list(range(len(points)))
    return [Individual(np.asarray(p, dtype=float), float(f)) for p, f in zip(points, fitness)]


class TestInitPopulation:
    def test_in_bounds_and_evaluated(self):
        space = SearchSpace.unit(36)
        calls = []

        def evaluate(x):
            calls.append(x)
            return x, float(x.sum())

        pop = init_population(DEConfig(pop_size=10), space, np.random.default_rng(0), evaluate)
        assert len(pop) == 10 and len(calls) == 10
        for ind in pop:
            assert space.contains(ind.x) and ind.evaluated

    def test_deterministic(self):
        space = SearchSpace.unit(4)
        ev = lambda x: (x, 0.0)
        a = init_population(DEConfig(), space, np.random.default_rng(3), ev)
        b = init_population(DEConfig(), space, np.random.default_rng(3), ev)
        for ia, ib in zip(a, b):
            np.testing.assert_array_equal(ia.x, ib.x)

    def test_small_population_rejected(self):
        with pytest.raises(ValueError):
            DEConfig(pop_size=3)


class TestMutateRand1:
    def test_direct_formula(self):
        pop = pop_from([(0.0, 0.0), (1.0, 1.0), (0.0, 0.0), (9.0, 9.0)])
        rng = np.random.default_rng(0)
        for _ in range(20):
            donor = mutate_rand1(pop, 3, 0.7, rng)
            assert donor.shape == (2,)
        # force a specific draw by using the 3 available donors around target 3
        base = pop[0].x + 0.7 * (pop[1].x - pop[2].x)
        np.testing.assert_allclose(base, [0.7, 0.7])

    def test_zero_difference(self):
        pop = pop_from([(2.0,), (5.0,), (5.0,), (1.0,)])
        rng = np.random.default_rng(1)
        donors = {float(mutate_rand1(pop, 3, 0.7, rng)[0]) for _ in range(50)}
        assert donors <= {2.0, 5.0, 2.0 + 0.7 * 3, 5.0 - 0.7 * 3, 5.0 + 0.7 * 3, 2.0 - 0.7 * 3}

    def test_f_zero_returns_base(self):
        pop = pop_from([(1.0,), (2.0,), (3.0,), (4.0,)])
        rng = np.random.default_rng(2)
        for _ in range(20):
            donor = mutate_rand1(pop, 0, 0.0, rng)
            assert float(donor[0]) in {2.0, 3.0, 4.0}

    def test_small_population(self):
        with pytest.raises(ValueError):
            mutate_rand1(pop_from([(0.0,)] * 3), 0, 0.5, np.random.default_rng(0))


class TestMutateBest1:
    def test_identical_difference_pair_returns_best(self):
        pop = pop_from([(1.0, 1.0), (4.0, 4.0), (4.0, 4.0), (7.0, 7.0)], fitness=[0, 5, 5, 9])
        rng = np.random.default_rng(0)
        for _ in range(20):
            donor = mutate_best1(pop, 3, 0.7, rng)
            if (donor == pop[0].x).all():
                break
        # with equal r1/r2 values the donor must equal the best point
        pop_eq = pop_from([(1.0, 1.0), (4.0, 4.0), (4.0, 4.0), (7.0, 7.0)], fitness=[0, 5, 6, 9])
        donor = mutate_best1(pop_eq, 3, 0.0, np.random.default_rng(0))
        np.testing.assert_array_equal(donor, pop_eq[0].x)

    def test_degenerate_population(self):
        pop = pop_from([(2.0, 2.0)] * 5, fitness=[1, 2, 3, 4, 5])
        donor = mutate_best1(pop, 0, 0.7, np.random.default_rng(0))
        np.testing.assert_array_equal(donor, [2.0, 2.0])


class TestCrossoverBinomial:
    def test_cr_one_copies_donor(self):
        rng = np.random.default_rng(0)
        target, donor = np.zeros(20), np.ones(20)
        np.testing.assert_array_equal(crossover_binomial(target, donor, 1.0, rng), donor)

    def test_cr_zero_forces_exactly_one_index(self):
        rng = np.random.default_rng(1)
        target, donor = np.zeros(20), np.ones(20)
        for _ in range(50):
            trial = crossover_binomial(target, donor, 0.0, rng)
            assert int((trial != target).sum()) == 1

    def test_equal_vectors_unchanged(self):
        rng = np.random.default_rng(2)
        x = np.arange(5, dtype=float)
        np.testing.assert_array_equal(crossover_binomial(x, x.copy(), 0.5, rng), x)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            crossover_binomial(np.zeros(3), np.zeros(4), 0.5, np.random.default_rng(0))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(0.0, 1.0))
    def test_trial_mixes_only_parents(self, seed, cr):
        rng = np.random.default_rng(seed)
        target, donor = np.zeros(8), np.ones(8)
        trial = crossover_binomial(target, donor, cr, rng)
        assert set(np.unique(trial)) <= {0.0, 1.0}
        assert (trial == 1.0).sum() >= 1  # forced index


class TestSelectGreedy:
    def test_better_trial_survives(self):
        target, trial = Individual(np.zeros(1), 2.0), Individual(np.ones(1), 1.0)
        assert select_greedy(target, trial) is trial

    def test_tie_favors_trial(self):
        target, trial = Individual(np.zeros(1), 1.0), Individual(np.ones(1), 1.0)
        assert select_greedy(target, trial) is trial

    def test_worse_trial_loses(self):
        target, trial = Individual(np.zeros(1), 1.0), Individual(np.ones(1), 2.0)
        assert select_greedy(target, trial) is target

    def test_unevaluated_rejected(self):
        with pytest.raises(ValueError):
            select_greedy(Individual(np.zeros(1)), Individual(np.ones(1), 1.0))


class TestOpposition:
    def test_basic_reflection(self):
        space = SearchSpace.unit(1)
        assert opposition_point(space, np.array([0.3]))[0] == pytest.approx(0.7)

    def test_midpoint_fixed(self):
        space = SearchSpace(np.array([-1.0, 0.0]), np.array([3.0, 2.0]))
        mid = (space.lower + space.upper) / 2
        np.testing.assert_allclose(opposition_point(space, mid), mid)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, 4, elements=st.floats(0.0, 1.0)))
    def test_involution(self, x):
        space = SearchSpace.unit(4)
        np.testing.assert_allclose(opposition_point(space, opposition_point(space, x)), x, atol=1e-12)

    def test_out_of_bounds_rejected(self):
        with pytest.raises(ValueError):
            opposition_point(SearchSpace.unit(2), np.array([1.2, 0.0]))


class TestShade:
    def test_degenerate_memory_returns_center(self):
        memory = ShadeMemory(size=4, init_f=0.5, init_cr=0.5)
        f, cr = shade_sample_params(memory, np.random.default_rng(0), scale=0.0)
        assert (f, cr) == (0.5, 0.5)

    def test_f_in_unit_interval(self):
        memory = ShadeMemory(size=2, init_f=0.9, init_cr=0.5)
        rng = np.random.default_rng(1)
        for _ in range(500):
            f, cr = shade_sample_params(memory, rng)
            assert 0.0 < f <= 1.0
            assert 0.0 <= cr <= 1.0

    def test_same_rng_state_same_sample(self):
        memory = ShadeMemory(size=3)
        a = shade_sample_params(memory, np.random.default_rng(42))
        b = shade_sample_params(memory, np.random.default_rng(42))
        assert a == b

    def test_single_success_stores_value(self):
        memory = ShadeMemory(size=2)
        shade_update_memory(memory, [0.5], [0.3], [1.0])
        assert memory.f_means[0] == pytest.approx(0.5)
        assert memory.cr_means[0] == pytest.approx(0.3)
        assert memory.pos == 1

    def test_equal_weight_lehmer_mean(self):
        memory = ShadeMemory(size=2)
        shade_update_memory(memory, [0.2, 0.8], [0.4, 0.6], [1.0, 1.0])
        assert memory.f_means[0] == pytest.approx((0.04 + 0.64) / (0.2 + 0.8))
        assert memory.cr_means[0] == pytest.approx(0.5)

    def test_no_success_no_update(self):
        memory = ShadeMemory(size=2)
        before = memory.f_means.copy()
        shade_update_memory(memory, [], [], [])
        np.testing.assert_array_equal(memory.f_means, before)
        assert memory.pos == 0

    def test_pointer_wraps(self):
        memory = ShadeMemory(size=2)
        for _ in range(3):
            shade_update_memory(memory, [0.5], [0.5], [1.0])
        assert memory.pos == 1


class TestJadeMutation:
    def test_pbest_is_single_best_for_small_p(self):
        pop = pop_from([(0.0,), (1.0,), (2.0,), (3.0,)], fitness=[5, 0, 7, 9])
        rng = np.random.default_rng(0)
        donor = jade_mutation(pop, [], 3, 0.0, 1.0 / len(pop), rng)
        # F = 0 collapses the donor onto the target regardless of pbest
        np.testing.assert_array_equal(donor, pop[3].x)

    def test_f_zero_returns_target(self):
        pop = pop_from([(0.0, 1.0), (1.0, 2.0), (2.0, 0.0), (3.0, 5.0)])
        donor = jade_mutation(pop, [], 1, 0.0, 0.5, np.random.default_rng(0))
        np.testing.assert_array_equal(donor, pop[1].x)

    def test_formula_with_pinned_draws(self):
        pop = pop_from([(0.0,), (2.0,), (4.0,), (6.0,)], fitness=[0, 1, 2, 3])
        rng_a = np.random.default_rng(123)
        donor = jade_mutation(pop, [], 2, 0.5, 0.25, rng_a)
        # p=0.25 over 4 -> pbest is the single best (index 0)
        rng_b = np.random.default_rng(123)
        rng_b.integers(1)  # consumed for the pbest draw
        xs = np.array([0.0, 2.0, 4.0, 6.0])
        x_i = xs[2]
        expected_contains = [
            x_i + 0.5 * (0.0 - x_i) + 0.5 * (xs[r1] - xs[r2])
            for r1 in range(4)
            for r2 in range(4)
            if r1 != 2 and r2 not in (2, r1)
        ]
        assert any(np.isclose(float(donor[0]), v) for v in expected_contains)

    def test_empty_archive_uses_population_only(self):
        pop = pop_from([(0.0,), (1.0,), (2.0,), (3.0,)])
        rng = np.random.default_rng(0)
        for _ in range(30):
            donor = jade_mutation(pop, [], 0, 1.0, 0.5, rng)
            assert np.isfinite(donor).all()

    def test_invalid_p(self):
        pop = pop_from([(0.0,), (1.0,), (2.0,), (3.0,)])
        with pytest.raises(ValueError):
            jade_mutation(pop, [], 0, 0.5, 0.0, np.random.default_rng(0))


class TestDeglMutation:
    def test_endpoints_match_component_models(self):
        rng_pop = np.random.default_rng(7)
        pop = pop_from(rng_pop.uniform(size=(8, 3)), fitness=rng_pop.uniform(size=8))
        for weight in (0.0, 0.5, 1.0):
            global_, local = _degl_models(pop, 2, 0.7, 2, np.random.default_rng(99))
            donor = degl_mutation(pop, 2, 0.7, 2, weight, np.random.default_rng(99))
            np.testing.assert_allclose(donor, weight * global_ + (1 - weight) * local)

    def test_identical_population_returns_common_point(self):
        pop = pop_from([(3.0, 4.0)] * 6, fitness=range(6))
        donor = degl_mutation(pop, 1, 0.7, 2, 0.5, np.random.default_rng(0))
        np.testing.assert_allclose(donor, [3.0, 4.0])

    def test_invalid_neighborhood(self):
        pop = pop_from([(0.0,)] * 6, fitness=range(6))
        with pytest.raises(ValueError):
            degl_mutation(pop, 0, 0.7, 3, 0.5, np.random.default_rng(0))


class TestRankSelection:
    def test_uniform_for_ties(self):
        pop = pop_from([(i,) for i in range(4)], fitness=[2.0] * 4)
        np.testing.assert_allclose(rank_selection_probabilities(pop), np.full(4, 0.25))

    def test_two_individuals_linear_ranking(self):
        pop = pop_from([(0.0,), (1.0,)], fitness=[1.0, 5.0])
        np.testing.assert_allclose(rank_selection_probabilities(pop), [2 / 3, 1 / 3])

    def test_sums_to_one_and_orders_by_fitness(self):
        rng = np.random.default_rng(0)
        pop = pop_from(rng.uniform(size=(9, 2)), fitness=rng.uniform(size=9))
        probs = rank_selection_probabilities(pop)
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        fitness = np.array([ind.fitness for ind in pop])
        assert (np.argsort(probs)[::-1] == np.argsort(fitness, kind="stable")).all()


class TestSpeciation:
    def test_single_cluster_single_species(self):
        rng = np.random.default_rng(0)
        pop = pop_from(0.5 + 0.01 * rng.normal(size=(10, 2)), fitness=rng.uniform(size=10))
        species = speciation_partition(pop, radius=1.0)
        assert len(species) == 1 and sorted(species[0]) == list(range(10))

    def test_two_clusters_split_correctly(self):
        rng = np.random.default_rng(1)
        left = 0.1 + 0.01 * rng.normal(size=(5, 2))
        right = 0.9 + 0.01 * rng.normal(size=(5, 2))
        pop = pop_from(np.vstack([left, right]), fitness=rng.uniform(size=10))
        species = speciation_partition(pop, radius=0.3)
        assert len(species) == 2
        memberships = [set(s) for s in species]
        assert {frozenset(m) for m in memberships} == {
            frozenset(range(5)),
            frozenset(range(5, 10)),
        }
        # brute-force nearest-seed assignment agrees
        xs = np.stack([ind.x for ind in pop])
        seeds = [s[0] for s in species]
        for member_set, seed in zip(memberships, seeds):
            for j in member_set:
                nearest = min(seeds, key=lambda s: np.linalg.norm(xs[j] - xs[s]))
                assert nearest == seed

    def test_partition_contract(self):
        rng = np.random.default_rng(2)
        pop = pop_from(rng.uniform(size=(12, 3)), fitness=rng.uniform(size=12))
        species = speciation_partition(pop, size_cap=5)
        flat = [i for s in species for i in s]
        assert sorted(flat) == list(range(12))
        assert all(len(s) <= 5 for s in species)
        fitness = np.array([ind.fitness for ind in pop])
        for s in species:
            assert fitness[s[0]] == min(fitness[j] for j in s)  # seed is species best


class TestSimilarityMutation:
    def test_identical_population(self):
        pop = pop_from([(1.0, 2.0)] * 5, fitness=range(5))
        donor = similarity_mutation(pop, 0, 0.7, np.random.default_rng(0))
        np.testing.assert_allclose(donor, [1.0, 2.0])

    def test_f_zero_returns_selected_base(self):
        pop = pop_from([(0.0,), (1.0,), (2.0,), (3.0,)])
        donor = similarity_mutation(pop, 0, 0.0, np.random.default_rng(0))
        assert float(donor[0]) in {1.0, 2.0, 3.0}

    def test_weights_decrease_with_distance(self):
        points = [(0.0, 0.0), (0.1, 0.0), (0.5, 0.0), (1.0, 0.0), (3.0, 0.0)]
        pop = pop_from(points, fitness=range(5))
        weights = _similarity_weights(pop, 0)
        distances = [0.1, 0.5, 1.0, 3.0]
        assert all(weights[i] > weights[i + 1] for i in range(3))
        assert weights.sum() == pytest.approx(1.0)
        assert np.argsort(-weights).tolist() == np.argsort(distances).tolist()

    def test_small_population_rejected(self):
        with pytest.raises(ValueError):
            similarity_mutation(pop_from([(0.0,)] * 3), 0, 0.5, np.random.default_rng(0))
