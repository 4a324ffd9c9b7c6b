import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from merging_chains import (DomainError, Environment, StateSpace,
                            StructuralError, constant_environment,
                            gen_two_state_no_merging, is_invariant,
                            kernel_from_conductances, load_environment,
                            normalize, save_environment, validate_environment)
from merging_chains.core import as_kernel, as_measure

from conftest import random_conductance_env


def cycle_kernel(n):
    K = np.zeros((n, n))
    for x in range(n):
        K[x, (x + 1) % n] = 0.5
        K[x, (x - 1) % n] = 0.5
    return K


class TestStateSpace:
    def test_size_must_be_positive(self):
        with pytest.raises(StructuralError):
            StateSpace(0)

    def test_labels_checked(self):
        StateSpace(2, ("a", "b"))
        with pytest.raises(StructuralError):
            StateSpace(2, ("a",))
        with pytest.raises(StructuralError):
            StateSpace(2, ("a", "a"))


class TestMeasureKernel:
    def test_measure_rejections(self):
        with pytest.raises(DomainError):
            as_measure([1.0, -0.1])
        with pytest.raises(DomainError):
            as_measure([0.0, 0.0])
        with pytest.raises(StructuralError):
            as_measure([[1.0]])

    def test_kernel_rejections(self):
        with pytest.raises(DomainError):
            as_kernel([[0.5, 0.4], [0.5, 0.5]])
        with pytest.raises(DomainError):
            as_kernel([[1.5, -0.5], [0.5, 0.5]])
        with pytest.raises(StructuralError):
            as_kernel([[1.0, 0.0]])


class TestIsInvariant:
    def test_identity_fixes_everything(self):
        assert is_invariant(np.eye(3), [1.0, 2.0, 3.0], tol=1e-12)

    def test_swap_kernel(self):
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert not is_invariant(swap, [1.0, 2.0])
        assert is_invariant(swap, [1.0, 1.0])

    def test_three_cycle_unit_conductances(self):
        # pi K multiplied by hand: each state receives 2*(1/2) + 2*(1/2) = 2
        K, pi = kernel_from_conductances(
            np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float))
        assert np.allclose(pi, 2.0)
        by_hand = np.array([pi[1] * K[1, 0] + pi[2] * K[2, 0],
                            pi[0] * K[0, 1] + pi[2] * K[2, 1],
                            pi[0] * K[0, 2] + pi[1] * K[1, 2]])
        np.testing.assert_allclose(by_hand, pi)
        assert is_invariant(K, pi)

    def test_dimension_mismatch(self):
        with pytest.raises(StructuralError):
            is_invariant(np.eye(3), [1.0, 2.0])


class TestNormalize:
    def test_basic(self):
        np.testing.assert_array_equal(normalize([2.0, 2.0]), [0.5, 0.5])
        np.testing.assert_array_equal(normalize([1.0, 3.0]), [0.25, 0.75])

    def test_two_state_measure_at_t2(self):
        # growing-loop chain at t=2, eps=1: weights (5, 5) -> (1/2, 1/2)
        env = gen_two_state_no_merging(1.0, horizon=3)
        np.testing.assert_array_equal(env.measure(2), [5.0, 5.0])
        np.testing.assert_array_equal(normalize(env.measure(2)), [0.5, 0.5])

    def test_zero_mass_rejected(self):
        with pytest.raises(DomainError):
            normalize([0.0, 0.0])

    @given(st.lists(st.floats(min_value=1e-3, max_value=1e3), min_size=1,
                    max_size=12))
    @settings(max_examples=200, deadline=None)
    def test_idempotent_exactly(self, weights):
        once = normalize(np.array(weights))
        np.testing.assert_array_equal(normalize(once), once)

    @given(st.lists(st.floats(min_value=1e-3, max_value=1e3), min_size=2,
                    max_size=8))
    @settings(max_examples=100, deadline=None)
    def test_proportional_and_unit_mass(self, weights):
        w = np.array(weights)
        p = normalize(w)
        assert abs(p.sum() - 1.0) < 1e-12
        ratios = p / w
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)


class TestEnvironment:
    def test_time_zero_convention(self, rng):
        env = random_conductance_env(rng, 4, 6)
        np.testing.assert_array_equal(env.measure(0), env.measure(1))

    def test_index_ranges(self, rng):
        env = random_conductance_env(rng, 3, 5)
        with pytest.raises(DomainError):
            env.kernel(0)
        with pytest.raises(DomainError):
            env.kernel(6)
        with pytest.raises(DomainError):
            env.measure(-1)

    def test_lazy_matches_explicit(self, rng):
        env = random_conductance_env(rng, 4, 6)
        stacked = np.stack([env.kernel(t) for t in range(1, 7)])
        lazy = Environment(lambda t: stacked[t - 1],
                           np.stack([env.measure(t) for t in range(1, 7)]))
        for t in (1, 3, 6):
            np.testing.assert_array_equal(lazy.kernel(t), env.kernel(t))
        mat = lazy.materialize()
        np.testing.assert_array_equal(mat.kernel(2), env.kernel(2))

    def test_constant_all_ones_fixed(self, rng):
        # the constant-1 function is fixed by any kernel, up to row tolerance
        env = random_conductance_env(rng, 5, 3)
        ones = np.ones(5)
        for t in (1, 2, 3):
            np.testing.assert_allclose(env.kernel(t) @ ones, ones, atol=1e-12)


class TestValidateEnvironment:
    def test_constant_environment_ok(self):
        K, pi = kernel_from_conductances(
            np.array([[0, 2, 1], [2, 0, 1], [1, 1, 0]], dtype=float))
        env = constant_environment(K, pi, horizon=5)
        assert validate_environment(env).ok

    def test_constructed_monotonicity_failure(self):
        # identity kernels keep every measure invariant; only the drop trips
        K = np.eye(2)
        measures = np.array([[1.0, 1.0], [0.5, 1.0]])
        env = Environment(np.stack([K, K]), measures)
        report = validate_environment(env)
        assert not report.ok
        names = {v[0] for v in report.violations}
        assert names == {"monotonicity"}
        (_, t, x, magnitude) = report.violations[0]
        assert (t, x) == (1, 0)
        assert magnitude == pytest.approx(0.5)

    def test_invariance_failure_reported(self):
        K = np.array([[0.9, 0.1], [0.5, 0.5]])
        env = Environment(np.stack([K]), np.array([[1.0, 1.0]]))
        report = validate_environment(env)
        assert not report.ok
        assert any(v[0] == "invariance" for v in report.violations)

    def test_two_state_schedule_valid(self):
        # direct multiplication: pi_t = (t^2+1, t^2+1) is invariant per step
        env = gen_two_state_no_merging(1.0, horizon=10)
        for t in range(1, 11):
            pi = env.measure(t)
            assert pi[0] == pytest.approx(t ** 2 + 1)
            np.testing.assert_allclose(pi @ env.kernel(t), pi, atol=1e-12)
        assert validate_environment(env).ok

    def test_monotonicity_is_transitive(self, rng):
        env = random_conductance_env(rng, 5, 12)
        assert validate_environment(env).ok
        for s in range(1, 13):
            for t in range(s, 13):
                assert np.all(env.measure(s) <= env.measure(t) + 1e-12)


class TestSerialization:
    def test_round_trip_bit_exact(self, rng, tmp_path):
        env = random_conductance_env(rng, 4, 5)
        path = tmp_path / "env.json"
        save_environment(env, path)
        back = load_environment(path)
        assert back.horizon == env.horizon
        for t in range(1, 6):
            np.testing.assert_array_equal(back.kernel(t), env.kernel(t))
            np.testing.assert_array_equal(back.measure(t), env.measure(t))

    def test_missing_fields_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"horizon": 2}))
        with pytest.raises(StructuralError):
            load_environment(path)
