import itertools

import numpy as np
import pytest

from merging_chains import (DomainError, Environment, HypothesisViolationError,
                            adjoint, centered_forward_dual, centered_operator,
                            constant_environment, density,
                            density_evolution_identity_check, dirac,
                            dual_forward, dual_forward_probability, evolve,
                            forward_dual_product, kernel_from_conductances,
                            kernel_product, lazify, mass_vector, normalize)
from merging_chains.evolution import CenteredOperator

from conftest import random_conductance_env, random_environment


def brute_force_law(env, x0, t):
    """Sum transition-probability products over every length-t path."""
    n = env.n_states
    law = np.zeros(n)
    for path in itertools.product(range(n), repeat=t):
        p, prev = 1.0, x0
        for s, state in enumerate(path, start=1):
            p *= env.kernel(s)[prev, state]
            prev = state
        law[path[-1]] += p
    return law


class TestEvolve:
    def test_identity_kernels(self):
        env = constant_environment(np.eye(3), np.ones(3), horizon=5)
        np.testing.assert_array_equal(evolve(dirac(3, 0), env, 5), dirac(3, 0))

    def test_swap_kernel_one_step(self):
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        env = constant_environment(swap, np.ones(2), horizon=2)
        np.testing.assert_array_equal(evolve(dirac(2, 0), env, 1), dirac(2, 1))

    def test_against_path_enumeration(self, rng):
        env = random_environment(rng, 3, 3)
        for x0 in range(3):
            expected = brute_force_law(env, x0, 3)
            np.testing.assert_allclose(evolve(dirac(3, x0), env, 3), expected,
                                       atol=1e-14)

    def test_time_zero_and_range(self, rng):
        env = random_conductance_env(rng, 3, 4)
        mu = normalize(np.array([1.0, 2.0, 3.0]))
        np.testing.assert_array_equal(evolve(mu, env, 0), mu)
        with pytest.raises(DomainError):
            evolve(mu, env, 5)

    def test_matches_kernel_product_long_horizon(self, rng):
        env = random_environment(rng, 5, 200)
        mu = normalize(rng.uniform(0.1, 1.0, 5))
        left = evolve(mu, env, 200)
        right = mu @ kernel_product(env, 0, 200)
        np.testing.assert_allclose(left, right, atol=1e-12)

    def test_mass_drift_detected(self):
        K = np.full((2, 2), 0.5) + np.array([[1e-5, 0.0], [0.0, 1e-5]])
        env = Environment(np.stack([K] * 50), np.ones((50, 2)), check=False)
        with pytest.raises(DomainError, match="drift"):
            evolve(dirac(2, 0), env, 50)


class TestKernelProduct:
    def test_empty_product_is_identity(self, rng):
        env = random_conductance_env(rng, 4, 3)
        np.testing.assert_array_equal(kernel_product(env, 2, 2), np.eye(4))

    def test_single_factor(self, rng):
        env = random_conductance_env(rng, 4, 3)
        np.testing.assert_array_equal(kernel_product(env, 0, 1), env.kernel(1))

    def test_two_factors_double_sum(self, rng):
        env = random_environment(rng, 4, 2)
        prod = kernel_product(env, 0, 2)
        K1, K2 = env.kernel(1), env.kernel(2)
        for x in range(4):
            for z in range(4):
                expected = sum(K1[x, y] * K2[y, z] for y in range(4))
                assert prod[x, z] == pytest.approx(expected, abs=1e-15)


class TestAdjoint:
    def test_reversible_self_adjoint(self, rng):
        c = rng.uniform(0.1, 1.0, (5, 5))
        c = 0.5 * (c + c.T)
        K, pi = kernel_from_conductances(c)
        np.testing.assert_allclose(adjoint(K, pi), K, atol=1e-14)

    def test_rotation_reverses(self):
        rot = np.roll(np.eye(3), 1, axis=1)   # x -> x+1
        pi = np.ones(3)
        np.testing.assert_array_equal(adjoint(rot, pi), rot.T)

    def test_duality_identity(self, rng):
        env = random_environment(rng, 5, 1)
        K, pi = env.kernel(1), env.measure(1)
        Kstar = adjoint(K, pi)
        for _ in range(20):
            f = rng.standard_normal(5)
            g = rng.standard_normal(5)
            lhs = np.sum((K @ f) * g * pi)
            rhs = np.sum(f * (Kstar @ g) * pi)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_involution_on_reversible(self, rng):
        c = rng.uniform(0.1, 1.0, (4, 4))
        c = 0.5 * (c + c.T)
        K, pi = kernel_from_conductances(c)
        np.testing.assert_allclose(adjoint(adjoint(K, pi), pi), K, atol=1e-12)

    def test_invariance_enforced(self):
        K = np.array([[0.9, 0.1], [0.5, 0.5]])
        with pytest.raises(HypothesisViolationError):
            adjoint(K, np.ones(2))

    def test_adjoint_row_stochastic(self, rng):
        env = random_environment(rng, 6, 1)
        Kstar = adjoint(env.kernel(1), env.measure(1))
        np.testing.assert_allclose(Kstar.sum(axis=1), 1.0, atol=1e-12)


class TestDualForward:
    def test_collapses_to_adjoint(self, rng):
        env = random_environment(rng, 4, 1)
        K, pi = env.kernel(1), env.measure(1)
        np.testing.assert_allclose(dual_forward(K, pi, pi), adjoint(K, pi),
                                   atol=1e-14)

    def test_duality_identity(self, rng):
        env = random_conductance_env(rng, 5, 3)
        K = env.kernel(2)
        pi_prev, pi_next = env.measure(1), env.measure(2)
        fwd = dual_forward(K, pi_prev, pi_next)
        for _ in range(20):
            f = rng.standard_normal(5)
            g = rng.standard_normal(5)
            lhs = np.sum((K @ f) * g * pi_prev)
            rhs = np.sum(f * (fwd @ g) * pi_next)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_mass_relation(self, rng):
        # the unnormalised dual equals the probability dual times the mass
        # ratio pi_prev(V)/pi_next(V) (derived from the entry formulas)
        env = random_conductance_env(rng, 4, 3)
        K = env.kernel(3)
        pi_prev, pi_next = env.measure(2), env.measure(3)
        fwd = dual_forward(K, pi_prev, pi_next)
        fwd_prob = dual_forward_probability(K, pi_prev, pi_next)
        ratio = pi_prev.sum() / pi_next.sum()
        np.testing.assert_allclose(fwd, ratio * fwd_prob, rtol=1e-12)

    def test_probability_dual_duality(self, rng):
        env = random_conductance_env(rng, 4, 2)
        K = env.kernel(2)
        p_prev = env.probability(1)
        p_next = env.probability(2)
        fwd = dual_forward_probability(K, env.measure(1), env.measure(2))
        f = rng.standard_normal(4)
        g = rng.standard_normal(4)
        lhs = np.sum((K @ f) * g * p_prev)
        rhs = np.sum(f * (fwd @ g) * p_next)
        assert lhs == pytest.approx(rhs, abs=1e-13)


class TestCenteredOperator:
    def test_same_time_form(self, rng):
        env = random_conductance_env(rng, 4, 3)
        op = centered_operator(env, 2, 2)
        expected = np.eye(4) - np.outer(np.ones(4), env.probability(2))
        np.testing.assert_allclose(op.matrix, expected, atol=1e-15)

    def test_kills_constants(self, rng):
        env = random_environment(rng, 5, 6)
        op = centered_operator(env, 1, 5)
        np.testing.assert_allclose(op @ np.ones(5), 0.0, atol=1e-12)

    def test_rows_sum_to_zero(self, rng):
        for _ in range(5):
            env = random_environment(rng, 6, 8)
            for (s, t) in [(0, 0), (0, 8), (3, 7)]:
                op = centered_operator(env, s, t)
                np.testing.assert_allclose(op.matrix.sum(axis=1), 0.0,
                                           atol=1e-12)

    def test_semigroup(self, rng):
        for _ in range(5):
            env = random_environment(rng, 5, 10)
            for (s, r, t) in [(0, 3, 7), (1, 1, 9), (2, 5, 5), (0, 10, 10)]:
                left = centered_operator(env, s, r) @ centered_operator(env, r, t)
                right = centered_operator(env, s, t)
                np.testing.assert_allclose(left.matrix, right.matrix,
                                           atol=1e-12)

    def test_composition_guard(self, rng):
        env = random_conductance_env(rng, 3, 5)
        with pytest.raises(Exception):
            centered_operator(env, 0, 2) @ centered_operator(env, 3, 5)

    def test_bad_rows_rejected(self):
        with pytest.raises(Exception):
            CenteredOperator(np.array([[0.5, 0.0], [0.0, -0.5]]), 0, 1)


class TestDensity:
    def test_reference_density_is_one(self, rng):
        p = normalize(rng.uniform(0.5, 2.0, 5))
        np.testing.assert_allclose(density(p, p), 1.0)

    def test_dirac_density(self):
        p = np.array([0.25, 0.75])
        h = density(dirac(2, 1), p)
        np.testing.assert_allclose(h, [0.0, 1 / 0.75])

    def test_l2_norm_of_dirac_density(self, rng):
        p = normalize(rng.uniform(0.2, 1.5, 6))
        for z in range(6):
            h = density(dirac(6, z), p)
            norm = np.sqrt(np.sum(p * h * h))
            assert norm == pytest.approx(1.0 / np.sqrt(p[z]), rel=1e-12)

    def test_zero_reference_rejected(self):
        with pytest.raises(DomainError):
            density(dirac(2, 0), np.array([1.0, 0.0]))


class TestDensityEvolutionIdentities:
    def test_time_zero_exact(self, rng):
        env = random_conductance_env(rng, 4, 3)
        assert density_evolution_identity_check(env, 2, 0) == 0.0

    def test_constant_reversible_long_run(self, rng):
        c = rng.uniform(0.2, 1.5, (5, 5))
        c = 0.5 * (c + c.T)
        K, pi = kernel_from_conductances(c)
        env = constant_environment(lazify(K, 0.5), pi, horizon=50)
        assert density_evolution_identity_check(env, 1, 50) <= 1e-10

    def test_random_environments(self, rng):
        for _ in range(5):
            env = random_environment(rng, 5, 12)
            for z in (0, 4):
                assert density_evolution_identity_check(env, z, 12) <= 1e-10

    def test_mass_vector_independent_of_start(self, rng):
        # m_t = K_{0,t}^dual 1 must not depend on the start used to reach it
        env = random_environment(rng, 5, 8)
        m = mass_vector(env, 8)
        for z in range(5):
            h0 = density(dirac(5, z), env.probability(0))
            ht = density(evolve(dirac(5, z), env, 8), env.probability(8))
            lhs = centered_forward_dual(env, 0, 8) @ h0
            np.testing.assert_allclose(lhs, ht - m, atol=1e-11)

    def test_forward_dual_entries(self, rng):
        # K_{s,t}^dual entry formula: pi~_s(y) K_{s,t}(y,x) / pi~_t(x)
        env = random_conductance_env(rng, 4, 6)
        s, t = 1, 5
        fwd = forward_dual_product(env, s, t)
        prod = kernel_product(env, s, t)
        ps, pt = env.probability(s), env.probability(t)
        expected = prod.T * ps[None, :] / pt[:, None]
        np.testing.assert_allclose(fwd, expected, atol=1e-12)
