import math
from fractions import Fraction

import numpy as np
import pytest
from conftest import instance_and_bits, instances, make_instance
from hypothesis import given
from hypothesis import strategies as st

from cckp.model import (
    FitnessValue,
    Ordering,
    ProblemInstance,
    Solution,
    chebyshev_surrogate,
    covariance_term,
    expected_weight,
    fitness,
    fitness_compare,
    is_surrogate_feasible,
    penalized_beta,
    penalized_profit,
    weight_variance,
    weight_variance_batch,
)
from oracles import bit_rows, exact_fitness, quadratic_form


class TestInstance:
    def test_derived_sizes(self):
        inst = make_instance(K=3, m=4, profits=[1, 7, 2, 0])
        assert inst.n == 12
        assert inst.p_max == 7.0
        assert inst.group_of[:5] == (0, 0, 0, 0, 1)

    @pytest.mark.parametrize("field,value", [
        ("groups", 0), ("group_size", 0), ("expected_weight", 0.0), ("variance", -1.0),
        ("covariance", 0.0), ("budget", 0.0), ("tolerance", 1.0), ("tolerance", 0.0),
    ])
    def test_rejects_invalid(self, field, value):
        kw = dict(groups=2, group_size=2, expected_weight=1.0, variance=1.0, covariance=1.0,
                  budget=3.0, tolerance=0.5, profits=[[1, 1], [1, 1]])
        kw[field] = value
        with pytest.raises(ValueError, match=field):
            ProblemInstance(**kw)

    def test_rejects_bad_profits(self):
        with pytest.raises(ValueError, match="matrix"):
            ProblemInstance(2, 2, 1, 1, 1, 3, 0.5, [[1, 1]])
        with pytest.raises(ValueError, match="non-negative"):
            ProblemInstance(1, 2, 1, 1, 1, 3, 0.5, [[1, -1]])

    def test_profit_units_are_exact(self):
        inst = make_instance(K=1, m=3, profits=[0.1, 2.5, 3.0])
        units, den = inst.profit_units, inst.profit_denominator
        assert [Fraction(u, den) for u in units] == [Fraction(p) for p in (0.1, 2.5, 3.0)]


class TestSolution:
    def test_counts(self, small_instance):
        x = Solution.from_bits(small_instance, [1, 0, 1, 1, 1, 1])
        assert x.group_counts == (2, 3)
        assert x.ones == 5

    def test_from_items_uses_group_position(self, small_instance):
        x = Solution.from_items(small_instance, [(1, 2), (0, 0)])
        assert x.bits == (1, 0, 0, 0, 0, 1)

    def test_wrong_length(self, small_instance):
        with pytest.raises(ValueError):
            Solution.from_bits(small_instance, [1, 0])

    def test_flipped_leaves_parent(self, small_instance):
        x = Solution.zeros(small_instance)
        y = x.flipped([0, 4])
        assert x.ones == 0
        assert y.group_counts == (1, 1)

    def test_size_mismatch_rejected_by_operations(self, small_instance):
        other = make_instance(K=1, m=2)
        with pytest.raises(ValueError):
            expected_weight(small_instance, Solution.zeros(other))


class TestExpectedWeight:
    def test_empty(self, small_instance):
        assert expected_weight(small_instance, Solution.zeros(small_instance)) == 0

    def test_unit_weight_counts_ones(self):
        inst = make_instance(K=2, m=3, a=1.0)
        assert expected_weight(inst, Solution.from_bits(inst, [1, 1, 0, 1, 0, 1])) == 4

    def test_scaled(self):
        inst = make_instance(a=2.5)
        assert expected_weight(inst, Solution.from_bits(inst, [1, 1, 1, 0, 0, 0])) == 7.5


class TestCovarianceTerm:
    def test_one_item_per_group(self):
        inst = make_instance(K=3, m=3)
        assert covariance_term(inst, Solution.from_bits(inst, [1, 0, 0, 0, 1, 0, 0, 0, 1])) == 0

    def test_three_in_one_group(self):
        inst = make_instance(K=2, m=3, c=0.5)
        assert covariance_term(inst, Solution.from_bits(inst, [1, 1, 1, 0, 0, 0])) == 3.0

    def test_two_pairs(self):
        inst = make_instance(K=2, m=2, c=1.0)
        assert covariance_term(inst, Solution.from_bits(inst, [1, 1, 1, 1])) == 4.0


class TestWeightVariance:
    def test_empty(self, small_instance):
        assert weight_variance(small_instance, Solution.zeros(small_instance)) == 0

    def test_pair_in_group(self):
        inst = make_instance(K=1, m=2, d=1.0, c=0.5)
        assert weight_variance(inst, Solution.full(inst)) == 3.0

    def test_spread(self):
        inst = make_instance(K=3, m=2, d=1.0, c=1.0)
        assert weight_variance(inst, Solution.from_bits(inst, [1, 0, 1, 0, 0, 1])) == 3.0

    def test_matches_quadratic_form(self):
        inst = make_instance(K=3, m=3, d=0.7, c=0.3)
        X = bit_rows(inst.n)
        expected = quadratic_form(inst, X)
        got = [weight_variance(inst, Solution.from_bits(inst, row)) for row in X.tolist()]
        np.testing.assert_allclose(got, expected, rtol=1e-12)

    def test_batch_is_bit_identical(self):
        inst = make_instance(K=3, m=3, d=0.7, c=0.3)
        rows = bit_rows(inst.n).tolist()
        sols = [Solution.from_bits(inst, r) for r in rows]
        batch = weight_variance_batch(inst, [s.group_counts for s in sols])
        assert batch.tolist() == [weight_variance(inst, s) for s in sols]
        exact = weight_variance_batch(inst, [s.group_counts for s in sols], exact=True)
        assert exact == [weight_variance(inst, s, exact=True) for s in sols]


class TestSurrogate:
    def test_empty(self):
        inst = make_instance(B=3.0)
        assert chebyshev_surrogate(inst, Solution.zeros(inst)) == 0

    def test_single_item(self):
        inst = make_instance(a=1, d=1, B=3)
        assert chebyshev_surrogate(inst, Solution.from_bits(inst, [1, 0, 0, 0, 0, 0])) == pytest.approx(0.2, abs=1e-15)

    def test_pair_in_group(self):
        inst = make_instance(a=1, d=1, c=1, B=5)
        x = Solution.from_bits(inst, [1, 1, 0, 0, 0, 0])
        assert chebyshev_surrogate(inst, x) == pytest.approx(4 / 13, abs=1e-15)

    def test_undefined_at_budget(self):
        inst = make_instance(a=1, B=2)
        with pytest.raises(ValueError, match="undefined"):
            chebyshev_surrogate(inst, Solution.from_bits(inst, [1, 1, 0, 0, 0, 0]))


class TestPenalties:
    def test_penalty_branch(self):
        inst = make_instance(K=2, m=3, a=1, B=3)
        assert penalized_beta(inst, Solution.from_bits(inst, [1, 1, 1, 1, 1, 0])) == 3.0

    def test_surrogate_branch(self):
        inst = make_instance(a=1, d=1, B=3)
        assert penalized_beta(inst, Solution.from_bits(inst, [0, 0, 0, 1, 0, 0])) == pytest.approx(0.2, abs=1e-15)

    def test_expected_weight_equal_to_budget_is_penalized(self):
        inst = make_instance(a=1, B=2, alpha=0.99)
        x = Solution.from_bits(inst, [1, 0, 0, 1, 0, 0])
        assert penalized_beta(inst, x) == 1.0
        assert not is_surrogate_feasible(inst, x)

    def test_empty_solution(self):
        inst = make_instance()
        x = Solution.zeros(inst)
        assert penalized_beta(inst, x) == 0
        assert penalized_profit(inst, x) == 0
        assert is_surrogate_feasible(inst, x)

    def test_unit_profit_counts_ones(self):
        inst = make_instance(K=4, m=2, B=100, alpha=0.9)
        x = Solution.from_bits(inst, [1, 0, 1, 0, 1, 0, 1, 0])
        assert penalized_profit(inst, x) == 4

    def test_infeasible_profit(self):
        inst = make_instance(a=1, d=1, c=1, B=4, alpha=0.2)
        x = Solution.from_bits(inst, [1, 1, 0, 0, 0, 0])
        assert penalized_beta(inst, x) == 0.5
        assert not is_surrogate_feasible(inst, x)
        assert penalized_profit(inst, x) == -1

    def test_alpha_boundary_counts_as_feasible(self):
        # var 1, slack 3: beta = 1/10 exactly representable as the same double.
        inst = make_instance(a=1, d=1, B=4, alpha=0.1)
        x = Solution.from_bits(inst, [1, 0, 0, 0, 0, 0])
        assert penalized_beta(inst, x) == 0.1
        assert is_surrogate_feasible(inst, x)

    def test_exact_mode_matches_rational_definition(self):
        inst = make_instance(K=2, m=3, a=0.7, d=1.3, c=0.4, B=3.1, alpha=0.45,
                             profits=[[2.5, 1, 0.25], [3, 0.5, 1]])
        for row in bit_rows(inst.n).tolist():
            f = fitness(inst, Solution.from_bits(inst, row), exact=True)
            assert (f.penalized_profit, f.penalized_beta) == exact_fitness(inst, row)

    @given(instance_and_bits())
    def test_profit_is_minus_one_iff_infeasible(self, case):
        inst, bits = case
        x = Solution.from_bits(inst, bits)
        f = fitness(inst, x)
        assert (f.penalized_profit == -1) == (f.penalized_beta > inst.tolerance)
        assert f.penalized_beta >= 0


class TestFitnessCompare:
    def test_profit_dominates(self):
        assert fitness_compare(FitnessValue(5, 0.1), FitnessValue(4, 0.01)) is Ordering.GREATER

    def test_lower_beta_wins_ties(self):
        assert fitness_compare(FitnessValue(5, 0.1), FitnessValue(5, 0.2)) is Ordering.GREATER

    def test_infeasible_smaller_penalty_wins(self):
        assert fitness_compare(FitnessValue(-1, 3.0), FitnessValue(-1, 2.0)) is Ordering.LESS

    def test_float_ties(self):
        b = 0.1 + 0.2
        assert fitness_compare(FitnessValue(1, b), FitnessValue(1, 0.3)) is Ordering.EQUAL
        assert fitness_compare(FitnessValue(1, b), FitnessValue(1, 0.3), rtol=0) is Ordering.LESS

    fitness_values = st.builds(
        FitnessValue,
        st.sampled_from([-1.0, 0.0, 1.0, 2.5, 7.0]),
        st.sampled_from([0.0, 0.05, 0.3, 0.3 + 1e-16, 0.9, 1.0, 2.0]),
    )

    @given(fitness_values, fitness_values)
    def test_antisymmetric_and_total(self, fa, fb):
        ab, ba = fitness_compare(fa, fb), fitness_compare(fb, fa)
        assert ab == -ba
        assert fitness_compare(fa, fa) is Ordering.EQUAL

    @given(fitness_values, fitness_values, fitness_values)
    def test_transitive(self, fa, fb, fc):
        if fitness_compare(fa, fb) >= 0 and fitness_compare(fb, fc) >= 0:
            assert fitness_compare(fa, fc) >= 0


class TestMonotonicity:
    @given(instance_and_bits())
    def test_additions_increase_moments(self, case):
        inst, bits = case
        x = Solution.from_bits(inst, bits)
        for k in range(inst.n):
            if bits[k]:
                continue
            y = x.flipped([k])
            assert expected_weight(inst, y) > expected_weight(inst, x)
            assert weight_variance(inst, y) > weight_variance(inst, x)
            if expected_weight(inst, y) < inst.budget:
                assert chebyshev_surrogate(inst, y) > chebyshev_surrogate(inst, x)

    @given(instance_and_bits(max_groups=4, max_size=5))
    def test_exchange_toward_balance_lowers_covariance(self, case):
        inst, bits = case
        x = Solution.from_bits(inst, bits)
        m = inst.group_size
        for g_big, r_big in enumerate(x.group_counts):
            for g_small, r_small in enumerate(x.group_counts):
                if r_small >= r_big - 1:
                    continue
                out = next(g_big * m + j for j in range(m) if bits[g_big * m + j])
                into = next(g_small * m + j for j in range(m) if not bits[g_small * m + j])
                y = x.flipped([out, into])
                assert covariance_term(inst, y) < covariance_term(inst, x)
                assert y.ones == x.ones
                assert expected_weight(inst, y) == expected_weight(inst, x)

    @given(instances(), st.floats(0.01, 100), st.data())
    def test_profit_scaling_preserves_order(self, inst, lam, data):
        bits = st.lists(st.integers(0, 1), min_size=inst.n, max_size=inst.n)
        x = Solution.from_bits(inst, data.draw(bits))
        y = Solution.from_bits(inst, data.draw(bits))
        fx, fy = fitness(inst, x), fitness(inst, y)
        px, py = fx.penalized_profit, fy.penalized_profit
        if px != py and math.isclose(px, py, rel_tol=1e-9):
            return  # scaled sums may round onto each other
        scaled = inst.scaled_profits(lam)
        assert fitness_compare(fitness(scaled, x), fitness(scaled, y)) == fitness_compare(fx, fy)
