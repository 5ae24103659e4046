import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zenclock.analytic import (
    DensityMatrix,
    a0_opt,
    amplitude,
    bob_conditional_density,
    chain_prob_plus,
    evolve_bob,
    k_opt,
    prob_plus,
    rho_ab_computational,
    rho_ab_measurement,
    rho_ab_numerators,
)
from zenclock.states import dicke_state, partial_trace_pair, rotate_to_measurement_basis
from zenclock.verify import pipeline_prob_plus

PHASES = [0.0, math.pi / 7, math.pi / 3, math.pi / 2, math.pi, 3 * math.pi / 2]


def nk_pairs(max_n):
    return st.integers(2, max_n).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n)))


class TestPairDensity:
    def test_w3(self):
        expected = np.array([[2, 0, 0, 0], [0, 2, 2, 0], [0, 2, 2, 0], [0, 0, 0, 0]]) / 6
        np.testing.assert_allclose(rho_ab_computational(3, 1).entries, expected, atol=1e-16)

    def test_bell_type(self):
        expected = np.array([[0, 0, 0, 0], [0, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 0]]) / 2
        np.testing.assert_allclose(rho_ab_computational(2, 1).entries, expected, atol=1e-16)

    def test_matches_statevector_oracle(self):
        oracle = partial_trace_pair(dicke_state(7, 3), 0, 1).entries
        np.testing.assert_allclose(rho_ab_computational(7, 3).entries, oracle, atol=1e-12)
        oracle = partial_trace_pair(dicke_state(5, 2), 0, 1).entries
        np.testing.assert_allclose(rho_ab_computational(5, 2).entries, oracle, atol=1e-12)

    def test_rejects_small_n(self):
        with pytest.raises(ValueError):
            rho_ab_computational(1, 0)

    @given(nk_pairs(10**6))
    def test_trace_identity_integer(self, nk):
        n, k = nk
        zz, c, oo, den = rho_ab_numerators(n, k)
        assert zz + 2 * c + oo == den

    @given(nk_pairs(500))
    def test_valid_and_symmetric(self, nk):
        rho = rho_ab_computational(*nk)
        assert rho.problems() == []
        m = rho.entries
        assert np.array_equal(m, m.T)
        assert m[1, 1] == m[1, 2] == m[2, 1] == m[2, 2]


class TestMeasurementBasis:
    def test_product_state(self):
        rho = DensityMatrix(np.diag([1.0, 0, 0, 0]))
        np.testing.assert_allclose(rho_ab_measurement(rho).entries, np.full((4, 4), 0.25), atol=1e-15)

    def test_identity_invariant(self):
        out = rho_ab_measurement(DensityMatrix(np.eye(4) / 4))
        np.testing.assert_allclose(out.entries, np.eye(4) / 4, atol=1e-15)
        assert out.basis == "plusminus"

    def test_involution(self):
        rho = rho_ab_computational(6, 2)
        back = rho_ab_measurement(rho_ab_measurement(rho))
        assert back.basis == "computational"
        np.testing.assert_allclose(back.entries, rho.entries, atol=1e-12)

    def test_statevector_oracle(self):
        psi = dicke_state(5, 2)
        psi = rotate_to_measurement_basis(rotate_to_measurement_basis(psi, 0), 1)
        oracle = partial_trace_pair(psi, 0, 1).entries
        np.testing.assert_allclose(rho_ab_measurement(rho_ab_computational(5, 2)).entries, oracle, atol=1e-12)

    def test_malformed(self):
        with pytest.raises(ValueError):
            rho_ab_measurement(DensityMatrix(np.eye(4)))
        with pytest.raises(ValueError):
            rho_ab_measurement(DensityMatrix(np.eye(2) / 2))


class TestBobConditional:
    def test_bell_type_perfect_correlation(self):
        rho_b = bob_conditional_density(rho_ab_measurement(rho_ab_computational(2, 1)), "plus")
        np.testing.assert_allclose(rho_b.entries, [[1, 0], [0, 0]], atol=1e-15)

    def test_maximally_mixed(self):
        rho = DensityMatrix(np.eye(4) / 4, "plusminus")
        for outcome in ("plus", "minus"):
            np.testing.assert_allclose(bob_conditional_density(rho, outcome).entries, np.eye(2) / 2, atol=1e-15)

    def test_zero_probability_rejected(self):
        rho = DensityMatrix(np.diag([1.0, 0, 0, 0]), "plusminus")
        with pytest.raises(ValueError):
            bob_conditional_density(rho, "minus")

    def test_wrong_basis(self):
        with pytest.raises(ValueError):
            bob_conditional_density(rho_ab_computational(3, 1), "plus")

    @pytest.mark.parametrize("phase", PHASES)
    def test_chain_five_two(self, phase):
        p = chain_prob_plus(5, 2, 1.0, phase)
        assert abs(p - prob_plus(5, 2, 1.0, phase)) < 1e-12
        assert abs(p - pipeline_prob_plus(5, 2, 1.0, phase)) < 1e-12
        rho = bob_conditional_density(rho_ab_measurement(evolve_bob(rho_ab_computational(5, 2), 1.0, phase)))
        assert rho.problems() == []

    @pytest.mark.parametrize("n,k", [(3, 1), (4, 2), (5, 2), (6, 1)])
    @pytest.mark.parametrize("phase", PHASES)
    def test_alice_minus_flips_sign(self, n, k, phase):
        expected = 0.5 - float(amplitude(k, n)) * math.cos(phase)
        assert abs(chain_prob_plus(n, k, 1.0, phase, "minus") - expected) < 1e-12
        assert abs(pipeline_prob_plus(n, k, 1.0, phase, alice_outcome=1) - expected) < 1e-12


class TestProbPlus:
    @given(st.integers(2, 200), st.floats(-20, 20))
    def test_w_state_law(self, n, phase):
        assert abs(prob_plus(n, 1, 1.0, phase) - (0.5 + math.cos(phase) / n)) < 1e-15

    def test_perfect_correlation(self):
        assert prob_plus(2, 1, 3.0, 0.0) == 1.0

    def test_four_two_at_pi(self):
        assert abs(prob_plus(4, 2, 1.0, math.pi) - 1 / 6) < 1e-15

    @given(nk_pairs(300), st.floats(0.1, 5), st.floats(-10, 10))
    def test_in_unit_interval(self, nk, w, dt):
        p = prob_plus(*nk, w, dt)
        assert 0.0 <= p <= 1.0

    def test_rejects_small_n(self):
        with pytest.raises(ValueError):
            prob_plus(1, 1, 1.0, 0.0)


class TestAmplitude:
    @given(st.integers(2, 10**6))
    def test_w_state(self, n):
        assert amplitude(1, n) == 1 / n

    def test_zero(self):
        assert amplitude(0, 7) == 0

    def test_four_two(self):
        assert amplitude(2, 4) == 1 / 3
        assert amplitude(2, 4).as_fraction() == Fraction(1, 3)

    @given(nk_pairs(10**6))
    def test_symmetric_and_bounded(self, nk):
        n, k = nk
        a = amplitude(k, n)
        assert a == amplitude(n - k, n)
        assert 0 <= a <= 0.25 * n / (n - 1)

    def test_carries_arguments(self):
        a = amplitude(3, 7)
        assert (a.k, a.n) == (3, 7)

    def test_rejects(self):
        with pytest.raises(ValueError):
            amplitude(1, 1)
        with pytest.raises(ValueError):
            amplitude(5, 4)


class TestOptimum:
    def test_examples(self):
        assert k_opt(4) == 2
        assert k_opt(5) == 2
        assert amplitude(2, 5) == amplitude(3, 5)

    def test_exhaustive_argmax(self):
        for n in range(2, 1001):
            best = max(Fraction(k * (n - k), n * (n - 1)) for k in range(n + 1))
            assert amplitude(k_opt(n), n).as_fraction() == best

    def test_a0_values(self):
        assert a0_opt(2) == 0.5
        assert a0_opt(4) == 1 / 3 and a0_opt(4) > amplitude(1, 4)
        assert abs(a0_opt(1000) - float(Fraction(500 * 500, 1000 * 999))) == 0
        assert abs(a0_opt(1000) - 0.25) < 2.6e-4

    @given(st.integers(2, 10**5))
    def test_a0_matches_amplitude(self, n):
        assert a0_opt(n) == amplitude(k_opt(n), n)

    def test_improvement(self):
        for n in range(4, 300):
            assert a0_opt(n) > amplitude(1, n)
        for n in (2, 3):
            assert a0_opt(n) == amplitude(1, n)

    def test_rejects(self):
        for f in (k_opt, a0_opt):
            with pytest.raises(ValueError):
                f(1)
