import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from bfmech import Additive, Cardinality, ValueOracle, is_independent
from bfmech.generators import random_constraint, random_coverage, random_cut
from bfmech.subroutines import (
    brute_force_opt,
    constrained_greedy,
    double_greedy_unconstrained,
    dynkin,
    random_half,
    two_pass_knapsack,
)


def test_brute_force_single_affordable(additive_pair):
    res = brute_force_opt(additive_pair.oracle(), additive_pair.costs, additive_pair.budget)
    assert res.chosen == {0} and res.value == 5


def test_brute_force_empty():
    res = brute_force_opt(ValueOracle(Additive(())), (), 1.0)
    assert res.chosen == frozenset() and res.value == 0


def test_brute_force_path_cut(path_cut):
    res = brute_force_opt(ValueOracle(path_cut), (1.0, 1.0, 1.0), 3.0)
    assert res.value == 2
    # {1} and {0, 2} tie at 2; lexicographic order prefers (0, 2)
    assert res.chosen == {0, 2}


def test_brute_force_respects_constraint_and_unconstrained_flag():
    o = ValueOracle(Additive((1.0, 2.0, 3.0)))
    assert brute_force_opt(o, (5.0, 5.0, 5.0), 1.0).value == 0
    assert brute_force_opt(o, (5.0, 5.0, 5.0), 1.0, unconstrained=True).value == 6
    assert brute_force_opt(o, (1.0, 1.0, 1.0), 10.0, Cardinality(1)).chosen == {2}


def test_brute_force_limit():
    with pytest.raises(ValueError):
        brute_force_opt(ValueOracle(Additive((1.0,) * 21)), (1.0,) * 21, 5.0)


# ---------------------------------------------------------------- double greedy


def test_double_greedy_additive_returns_all():
    o = ValueOracle(Additive((1.0, 0.0, 2.0, 3.0)))
    assert double_greedy_unconstrained(o, range(4), 7).chosen == {0, 1, 2, 3}


def test_double_greedy_empty(path_cut):
    res = double_greedy_unconstrained(ValueOracle(path_cut), [], 3)
    assert res.chosen == frozenset() and res.value == 0


def test_double_greedy_half_of_opt_on_path(path_cut):
    o = ValueOracle(path_cut)
    mean = sum(double_greedy_unconstrained(o, range(3), s).value for s in range(2000)) / 2000
    assert mean >= 1.0


def test_double_greedy_deterministic_per_seed():
    inst = random_cut(9, seed=4)
    a = double_greedy_unconstrained(inst.oracle(), range(9), 11)
    b = double_greedy_unconstrained(inst.oracle(), range(9), 11)
    assert a.chosen == b.chosen


def test_double_greedy_restricted_to_d():
    inst = random_cut(8, seed=2)
    assert double_greedy_unconstrained(inst.oracle(), [1, 3, 5], 0).chosen <= {1, 3, 5}


# ---------------------------------------------------------------- knapsack greedy


def test_two_pass_hand_trace():
    o = ValueOracle(Additive((4.0, 3.0)))
    assert two_pass_knapsack(o, [0, 1], (2.0, 2.0), 2.0).value == 4


def test_two_pass_nothing_affordable():
    o = ValueOracle(Additive((4.0, 3.0)))
    res = two_pass_knapsack(o, [0, 1], (2.0, 2.0), 1.5)
    assert res.chosen == frozenset() and res.value == 0


def test_zero_cost_agents_taken_first():
    o = ValueOracle(Additive((1.0, 5.0, 2.0)))
    res = two_pass_knapsack(o, range(3), (0.0, 4.0, 0.0), 1.0)
    assert res.chosen == {0, 2}


@pytest.mark.parametrize("seed", range(60))
def test_two_pass_within_six_of_opt(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 12)
    inst = random_cut(n, seed=seed, budget_frac=rng.uniform(0.1, 0.6))
    o = inst.oracle()
    opt = brute_force_opt(o, inst.costs, inst.budget).value
    for tape in range(3):
        res = two_pass_knapsack(o, range(n), inst.costs, inst.budget, tape)
        assert res.value >= opt / 6
        assert math.fsum(inst.costs[i] for i in res.chosen) <= inst.budget


def test_constrained_greedy_cardinality_one():
    o = ValueOracle(Additive((4.0, 3.0)))
    res = constrained_greedy(o, [0, 1], (1.0, 1.0), 10.0, Cardinality(1), monotone=True)
    assert res.chosen == {0} and res.value == 4


@pytest.mark.parametrize("seed", range(50))
def test_constrained_greedy_without_system_matches_two_pass(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 10)
    inst = random_cut(n, seed=seed, budget_frac=rng.uniform(0.1, 0.6))
    a = two_pass_knapsack(inst.oracle(), range(n), inst.costs, inst.budget, seed)
    b = constrained_greedy(inst.oracle(), range(n), inst.costs, inst.budget, None, monotone=False, tape_seed=seed)
    assert a.value == b.value and a.chosen == b.chosen


@pytest.mark.parametrize("seed", range(40))
@pytest.mark.parametrize("monotone", [True, False])
def test_constrained_greedy_feasible(seed, monotone):
    rng = random.Random(seed)
    n = rng.randint(1, 10)
    make = random_coverage if monotone else random_cut
    inst = make(n, seed=seed, budget_frac=rng.uniform(0.1, 0.6))
    sys = random_constraint(n, seed)
    res = constrained_greedy(inst.oracle(), range(n), inst.costs, inst.budget, sys, monotone, seed)
    assert is_independent(sys, res.chosen)
    assert math.fsum(inst.costs[i] for i in res.chosen) <= inst.budget
    assert res.value == inst.oracle().value(res.chosen)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 9), st.booleans())
def test_solver_values_are_fresh(seed, n, monotone):
    inst = random_cut(n, seed=seed)
    for res in (
        two_pass_knapsack(inst.oracle(), range(n), inst.costs, inst.budget, seed),
        constrained_greedy(inst.oracle(), range(n), inst.costs, inst.budget, Cardinality(2), monotone, seed),
        double_greedy_unconstrained(inst.oracle(), range(n), seed),
    ):
        assert res.value == inst.oracle().value(res.chosen)
        assert res.queries > 0


@pytest.mark.xfail(strict=True, reason="density greedy can skip an agent at a larger budget and end lower")
def test_two_pass_monotone_in_budget():
    inst = random_cut(7, seed=13)
    low = two_pass_knapsack(inst.oracle(), range(7), inst.costs, 1.3).value
    high = two_pass_knapsack(inst.oracle(), range(7), inst.costs, 1.4).value
    assert high >= low


def test_budget_non_monotonicity_is_rare():
    """Pins how often a larger budget lowers the surrogate value on a grid."""
    drops = steps = 0
    for seed in range(40):
        n = random.Random(seed).randint(3, 10)
        inst = random_cut(n, seed=seed)
        o = inst.oracle()
        vals = [two_pass_knapsack(o, range(n), inst.costs, t / 10).value for t in range(1, 40)]
        steps += len(vals) - 1
        drops += sum(b < a for a, b in zip(vals, vals[1:]))
    assert drops / steps < 0.02


# ---------------------------------------------------------------- online helpers


def test_dynkin_examples():
    assert dynkin([1, 5, 3, 2]) == 1
    assert dynkin([7]) == 0
    assert dynkin([4, 3, 2, 1]) is None
    assert dynkin([]) is None


def test_dynkin_ties_accept_equal():
    assert dynkin([3, 1, 3]) == 2


def test_dynkin_skips_rejected_arrivals():
    assert dynkin([None, 2, 1]) == 1
    assert dynkin([5, None, 1]) is None


def test_random_half():
    D = [0, 2, 3]
    assert random_half(D, [1, 1, 1, 1]) == set(D)
    assert random_half(D, [0, 0, 0, 0]) == set()
    assert random_half(D, [1, 1, 0, 1]) == {0, 3}


@pytest.mark.parametrize("seed", range(3))
def test_random_half_quarter_of_opt(seed):
    inst = random_cut(12, seed=seed)
    o = inst.oracle()
    opt = brute_force_opt(o, inst.costs, inst.budget, unconstrained=True).value
    rng = random.Random(seed)
    vals = [o.value(random_half(range(12), [rng.getrandbits(1) for _ in range(12)])) for _ in range(4000)]
    mean = sum(vals) / len(vals)
    sigma = (sum((v - mean) ** 2 for v in vals) / (len(vals) - 1)) ** 0.5 / len(vals) ** 0.5
    assert mean >= 0.25 * opt - 3 * sigma
