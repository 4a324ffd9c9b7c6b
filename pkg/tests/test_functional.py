import numpy as np
import pytest

from merging_chains import (DomainError, HypothesisViolationError,
                            UnsupportedNormError, centered_operator,
                            dirichlet_form, dirichlet_form_operator, dirac,
                            entropy, kernel_from_conductances, lazify, lp_norm,
                            normalize, operator_norm, separation_distance,
                            tv_distance, variance, variance_double_sum)

from conftest import random_conductance_env, random_environment


class TestTotalVariation:
    def test_identical(self, rng):
        p = normalize(rng.uniform(0.1, 1.0, 5))
        assert tv_distance(p, p) == 0.0

    def test_disjoint_diracs(self):
        assert tv_distance(dirac(3, 0), dirac(3, 1)) == 1.0

    def test_direct_arithmetic(self):
        assert tv_distance([0.5, 0.5], [0.75, 0.25]) == pytest.approx(0.25)

    def test_symmetric_and_triangle(self, rng):
        for _ in range(50):
            p = normalize(rng.uniform(0.0, 1.0, 6) + 1e-9)
            q = normalize(rng.uniform(0.0, 1.0, 6) + 1e-9)
            r = normalize(rng.uniform(0.0, 1.0, 6) + 1e-9)
            assert tv_distance(p, q) == tv_distance(q, p)
            assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-15
            assert 0.0 <= tv_distance(p, q) <= 1.0


class TestSeparation:
    def test_identical(self, rng):
        p = normalize(rng.uniform(0.1, 1.0, 4))
        assert separation_distance(p, p) == pytest.approx(0.0, abs=1e-15)

    def test_dirac_vs_uniform(self):
        assert separation_distance(dirac(2, 0), [0.5, 0.5]) == 1.0

    def test_direct_arithmetic(self):
        s = separation_distance([0.5, 0.5], [0.75, 0.25])
        assert s == pytest.approx(1 - 0.5 / 0.75)

    def test_zero_reference_convention(self):
        # nu(x) = 0 < mu(x) returns the worst case 1
        assert separation_distance([0.5, 0.5], [1.0, 0.0]) == 1.0
        # both zero: that state contributes 0
        assert separation_distance([1.0, 0.0], [1.0, 0.0]) == 0.0

    def test_dominates_tv(self, rng):
        for _ in range(100):
            p = normalize(rng.uniform(0.0, 1.0, 5) + 1e-6)
            q = normalize(rng.uniform(0.05, 1.0, 5))
            assert tv_distance(p, q) <= separation_distance(p, q) + 1e-12


class TestLpNorm:
    def test_constant_under_probability(self, rng):
        p = normalize(rng.uniform(0.1, 1.0, 6))
        for exponent in (1, 2, 3, np.inf):
            assert lp_norm(np.ones(6), exponent, p) == pytest.approx(1.0)

    def test_sup_norm_ignores_measure(self, rng):
        f = rng.standard_normal(5)
        assert lp_norm(f, np.inf, rng.uniform(0.1, 1.0, 5)) == np.abs(f).max()

    def test_monotone_in_mass(self, rng):
        f = rng.standard_normal(6)
        pi = rng.uniform(0.1, 1.0, 6)
        bigger = pi + rng.uniform(0.0, 1.0, 6)
        for exponent in (1, 2, 4):
            assert lp_norm(f, exponent, pi) <= lp_norm(f, exponent, bigger) + 1e-15

    def test_p_below_one_rejected(self):
        with pytest.raises(DomainError):
            lp_norm([1.0], 0.5, [1.0])


class TestVariance:
    def test_constant_function(self, rng):
        pi = rng.uniform(0.1, 1.0, 5)
        assert variance(np.full(5, 3.7), pi) == pytest.approx(0.0, abs=1e-12)

    def test_bernoulli(self):
        assert variance(np.array([0.0, 1.0]), [0.5, 0.5]) == pytest.approx(0.25)

    def test_double_sum_identity(self, rng):
        for _ in range(30):
            n = rng.integers(2, 8)
            f = rng.standard_normal(n)
            pi = rng.uniform(0.1, 2.0, n)
            assert variance(f, pi) == pytest.approx(
                variance_double_sum(f, pi), abs=1e-12)

    def test_mass_scaling(self, rng):
        f = rng.standard_normal(6)
        pi = rng.uniform(0.1, 2.0, 6)
        assert variance(f, pi) == pytest.approx(
            pi.sum() * variance(f, normalize(pi)), rel=1e-12)

    def test_minimality_over_shifts(self, rng):
        # Var_pi(f) = inf_c ||f - c||^2, attained at the pi~-mean
        f = rng.standard_normal(5)
        pi = rng.uniform(0.1, 1.0, 5)
        v = variance(f, pi)
        mean = np.sum(normalize(pi) * f)
        for c in np.linspace(mean - 2, mean + 2, 101):
            assert v <= np.sum(pi * (f - c) ** 2) + 1e-12
        assert v == pytest.approx(np.sum(pi * (f - mean) ** 2))


class TestEntropy:
    def test_constant_is_zero(self, rng):
        p = normalize(rng.uniform(0.1, 1.0, 4))
        assert entropy(np.ones(4), p) == pytest.approx(0.0, abs=1e-12)

    def test_scaled_indicator_direct_sum(self):
        # f = sqrt(2) 1_{0} under uniform two points: f^2 = (2, 0),
        # mean of f^2 is 1, so the sum is (1/2) * 2 * log 2 = log 2
        f = np.array([np.sqrt(2.0), 0.0])
        assert entropy(f, [0.5, 0.5]) == pytest.approx(np.log(2.0))

    def test_quadratic_scaling(self, rng):
        p = normalize(rng.uniform(0.1, 1.0, 5))
        f = rng.standard_normal(5)
        lam = 2.7
        assert entropy(lam * f, p) == pytest.approx(
            lam ** 2 * entropy(f, p), rel=1e-12)

    def test_nonnegative_and_zero_iff_flat(self, rng):
        p = normalize(rng.uniform(0.1, 1.0, 5))
        for _ in range(50):
            f = rng.standard_normal(5)
            assert entropy(f, p) >= -1e-12
        flat = np.full(5, -2.0)
        assert entropy(flat, p) == pytest.approx(0.0, abs=1e-12)

    def test_zero_function_rejected(self):
        with pytest.raises(DomainError):
            entropy(np.zeros(3), normalize(np.ones(3)))


class TestDirichletForm:
    def test_constant_function(self, rng):
        env = random_conductance_env(rng, 4, 1)
        Q = env.kernel(1)
        assert dirichlet_form(np.ones(4), Q, env.measure(1)) == 0.0

    def test_identity_kernel(self, rng):
        f = rng.standard_normal(4)
        assert dirichlet_form(f, np.eye(4), np.ones(4)) == 0.0

    def test_two_state_cross_check(self):
        q = 0.3
        Q = np.array([[1 - q, q], [q, 1 - q]])
        pi = np.array([1.0, 1.0])
        f = np.array([0.0, 1.0])
        by_pairs = 0.5 * ((0 - 1) ** 2 * q * 1.0 + (1 - 0) ** 2 * q * 1.0)
        assert dirichlet_form(f, Q, pi) == pytest.approx(by_pairs)
        assert dirichlet_form_operator(f, Q, pi) == pytest.approx(by_pairs)

    def test_two_routes_agree(self, rng):
        for _ in range(20):
            env = random_environment(rng, 5, 1)
            Q, pi = env.kernel(1), env.measure(1)
            f = rng.standard_normal(5)
            assert dirichlet_form(f, Q, pi) == pytest.approx(
                dirichlet_form_operator(f, Q, pi), abs=1e-12)

    def test_invariance_enforced(self):
        Q = np.array([[0.9, 0.1], [0.5, 0.5]])
        with pytest.raises(HypothesisViolationError):
            dirichlet_form(np.array([0.0, 1.0]), Q, np.ones(2))


def random_operator(rng, n):
    return rng.standard_normal((n, n))


def random_measures(rng, n):
    return rng.uniform(0.2, 2.0, n), rng.uniform(0.2, 2.0, n)


SUPPORTED = [(1, 1), (1, 2), (1, np.inf), (2, 2), (2, np.inf),
             (np.inf, np.inf)]


class TestOperatorNorm:
    def test_identity_has_norm_one(self, rng):
        n = 5
        pi = rng.uniform(0.2, 2.0, n)
        for p, q in SUPPORTED:
            if p == q:
                assert operator_norm(np.eye(n), p, q, pi, pi) == pytest.approx(1.0)

    def test_random_probe_lower_bounds(self, rng):
        # no admissible function may beat the computed norm
        n = 5
        A = random_operator(rng, n)
        dom, cod = random_measures(rng, n)
        for p, q in SUPPORTED:
            norm = operator_norm(A, p, q, dom, cod)
            for _ in range(200):
                f = rng.standard_normal(n)
                nf = lp_norm(f, p, dom)
                if nf < 1e-12:
                    continue
                assert lp_norm(A @ f, q, cod) <= norm * nf * (1 + 1e-10)

    def test_22_matches_reference_svd(self, rng):
        n = 6
        A = random_operator(rng, n)
        dom, cod = random_measures(rng, n)
        M = np.sqrt(cod)[:, None] * A / np.sqrt(dom)[None, :]
        assert operator_norm(A, 2, 2, dom, cod) == pytest.approx(
            np.linalg.norm(M, ord=2), rel=1e-12)

    def test_centered_operator_sup_bound(self, rng):
        # the centered product contracts sup norms up to a factor 2
        for _ in range(10):
            env = random_environment(rng, 5, 8)
            op = centered_operator(env, 1, 7)
            norm = operator_norm(op.matrix, np.inf, np.inf,
                                 env.measure(7), env.measure(1))
            assert norm <= 2.0 + 1e-12

    def test_l2_interpolation_inequality(self, rng):
        p = normalize(rng.uniform(0.1, 1.0, 6))
        for _ in range(100):
            g = rng.standard_normal(6)
            assert lp_norm(g, 2, p) <= np.sqrt(
                lp_norm(g, np.inf, p) * lp_norm(g, 1, p)) * (1 + 1e-12)

    def test_submultiplicative_through_intermediate(self, rng):
        n = 5
        A = random_operator(rng, n)
        B = random_operator(rng, n)
        pis = [rng.uniform(0.2, 2.0, n) for _ in range(3)]
        chains = [((1, 2), (2, 2)), ((1, 2), (2, np.inf)),
                  ((2, 2), (2, np.inf)), ((1, 1), (1, 2))]
        for (pq, qr) in chains:
            p, q = pq
            q2, r = qr
            assert q == q2
            left = operator_norm(A @ B, p, r, pis[0], pis[2])
            right = (operator_norm(A, q, r, pis[1], pis[2])
                     * operator_norm(B, p, q, pis[0], pis[1]))
            assert left <= right * (1 + 1e-10)

    def test_unsupported_pair_rejected(self, rng):
        A = random_operator(rng, 3)
        pi = np.ones(3)
        with pytest.raises(UnsupportedNormError):
            operator_norm(A, np.inf, 1, pi, pi)
        with pytest.raises(UnsupportedNormError):
            operator_norm(A, 3, 2, pi, pi)

    def test_tv_through_density_cauchy_schwarz(self, rng):
        # d_TV(mu, nu) <= (1/2) || mu/pi - nu/pi ||_{l2(pi)}
        for _ in range(50):
            p = normalize(rng.uniform(0.1, 1.0, 6))
            mu = normalize(rng.uniform(0.0, 1.0, 6) + 1e-9)
            nu = normalize(rng.uniform(0.0, 1.0, 6) + 1e-9)
            h = mu / p - nu / p
            assert tv_distance(mu, nu) <= 0.5 * lp_norm(h, 2, p) + 1e-12
