import numpy as np

from surropt.de import Individual, dcmaea_init, dcmaea_step


def evaluated_pop(points, fn):
    return [Individual(np.asarray(p, dtype=float), fn(np.asarray(p, dtype=float))) for p in points]


def sphere(x):
    return float(np.sum(x * x))


def passthrough_eval(fn):
    def evaluate(x):
        return x, fn(x)

    return evaluate


class TestDcmaeaStep:
    def test_zero_step_size_collapses_offspring_onto_mean(self):
        rng = np.random.default_rng(0)
        pop = evaluated_pop(rng.uniform(-1, 1, size=(6, 3)), sphere)
        state = dcmaea_init(pop, sigma=0.0, de_scale=0.7)
        mean_before = state.mean.copy()
        _, offspring = dcmaea_step(state, pop, passthrough_eval(sphere), rng)
        for child in offspring:
            np.testing.assert_array_equal(child.x, mean_before)

    def test_covariance_stays_symmetric(self):
        rng = np.random.default_rng(1)
        pop = evaluated_pop(rng.uniform(-1, 1, size=(8, 4)), sphere)
        state = dcmaea_init(pop, sigma=0.5, de_scale=0.7)
        for _ in range(25):
            state, offspring = dcmaea_step(state, pop, passthrough_eval(sphere), rng)
            pop = [
                child if child.fitness <= parent.fitness else parent
                for parent, child in zip(pop, offspring)
            ]
            assert np.abs(state.cov - state.cov.T).max() <= 1e-12
            eigvals = np.linalg.eigvalsh(state.cov)
            assert (eigvals > 0).all()

    def test_mean_approaches_origin_on_sphere(self):
        rng = np.random.default_rng(7)
        pop = evaluated_pop(2.0 + rng.uniform(-0.5, 0.5, size=(10, 2)), sphere)
        state = dcmaea_init(pop, sigma=0.5, de_scale=0.7)
        first_distance = None
        for iteration in range(50):
            state, offspring = dcmaea_step(state, pop, passthrough_eval(sphere), rng)
            pop = [
                child if child.fitness <= parent.fitness else parent
                for parent, child in zip(pop, offspring)
            ]
            if iteration == 0:
                first_distance = np.linalg.norm(state.mean)
        assert np.linalg.norm(state.mean) < first_distance

    def test_eigenvalue_flooring_repairs_degenerate_covariance(self, caplog):
        rng = np.random.default_rng(3)
        pop = evaluated_pop(rng.uniform(-1, 1, size=(6, 3)), sphere)
        state = dcmaea_init(pop, sigma=0.3, de_scale=0.7)
        state.cov = np.diag([1.0, 1e-30, 1.0])  # effectively rank-deficient
        with caplog.at_level("WARNING"):
            state, _ = dcmaea_step(state, pop, passthrough_eval(sphere), rng)
        assert state.repairs == 1
        assert any("repaired" in record.message for record in caplog.records)
        assert (np.linalg.eigvalsh(state.cov) > 0).all()

    def test_deterministic_for_fixed_rng(self):
        def once():
            rng = np.random.default_rng(11)
            pop = evaluated_pop(rng.uniform(-1, 1, size=(6, 3)), sphere)
            state = dcmaea_init(pop, sigma=0.4, de_scale=0.7)
            state, offspring = dcmaea_step(state, pop, passthrough_eval(sphere), rng)
            return state, offspring

        state_a, off_a = once()
        state_b, off_b = once()
        np.testing.assert_array_equal(state_a.mean, state_b.mean)
        np.testing.assert_array_equal(state_a.cov, state_b.cov)
        for a, b in zip(off_a, off_b):
            np.testing.assert_array_equal(a.x, b.x)
            assert a.fitness == b.fitness
