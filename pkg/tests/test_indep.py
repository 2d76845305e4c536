import itertools

import pytest

from bfmech import Cardinality, Matching, NoConstraint, Partition, is_independent, rank_quotient
from bfmech.generators import random_constraint
from bfmech.indep import ConstraintError, constraint_from_dict, is_downward_closed, vertex_independent_sets


def test_cardinality():
    sys = Cardinality(2)
    assert is_independent(sys, [0, 3])
    assert not is_independent(sys, [0, 1, 2])


def test_matching_path_shares_vertex():
    sys = Matching(3, ((0, 1), (1, 2)))
    assert is_independent(sys, [0])
    assert not is_independent(sys, [0, 1])


def test_partition_caps_and_free_agents():
    sys = Partition(((0, 1), (2,)), (1, 1))
    assert is_independent(sys, [0, 2, 3])
    assert not is_independent(sys, [0, 1])


def test_partition_rejects_overlap():
    with pytest.raises(ConstraintError):
        Partition(((0, 1), (1, 2)), (1, 1))


@pytest.mark.parametrize(
    "sys", [NoConstraint(), Cardinality(0), Cardinality(2), Partition(((0, 1),), (1,)), Matching(3, ((0, 1), (1, 2)))]
)
def test_empty_set_independent(sys):
    assert is_independent(sys, [])


def test_rank_quotient_cardinality():
    for k in (1, 2, 3):
        assert rank_quotient(Cardinality(k), 6) == 1.0


def test_rank_quotient_partition_is_matroid():
    assert rank_quotient(Partition(((0, 1, 2), (3, 4)), (2, 1)), 6) == 1.0


def test_rank_quotient_star_vertex_sets():
    # centre 0 with leaves 1..3: {0} and {1,2,3} are both maximal
    sys = vertex_independent_sets(4, [(0, 1), (0, 2), (0, 3)])
    assert rank_quotient(sys, 4) == 3.0


def test_rank_quotient_triangle_matching():
    assert rank_quotient(Matching(3, ((0, 1), (1, 2), (0, 2))), 3) == 1.0


def test_rank_quotient_path_matching_is_two():
    # path a-b-c-d: {middle} and {both ends} are maximal
    assert rank_quotient(Matching(4, ((0, 1), (1, 2), (2, 3))), 3) == 2.0


@pytest.mark.parametrize("seed", range(25))
def test_matching_quotient_at_most_two(seed):
    sys = random_constraint(8, seed, "matching")
    assert 1.0 <= rank_quotient(sys, 8) <= 2.0


def test_rank_quotient_size_limit():
    with pytest.raises(ValueError, match="sampl"):
        rank_quotient(Cardinality(2), 17)


@pytest.mark.parametrize("kind", ["cardinality", "partition", "matching"])
def test_downward_closed(kind):
    for seed in range(10):
        assert is_downward_closed(random_constraint(10, seed, kind), 10)


def test_downward_closed_family():
    assert is_downward_closed(vertex_independent_sets(5, [(0, 1), (1, 2), (3, 4)]), 5)


def test_rank_quotient_matches_naive_enumeration():
    sys = random_constraint(6, 2, "matching")
    n = 6

    def maximal_sizes(X):
        subs = [S for r in range(len(X) + 1) for S in itertools.combinations(X, r) if is_independent(sys, S)]
        maximal = [S for S in subs if not any(set(S) < set(T) for T in subs)]
        return [len(S) for S in maximal]

    best = 1.0
    for r in range(1, n + 1):
        for X in itertools.combinations(range(n), r):
            sizes = maximal_sizes(X)
            if min(sizes) > 0:
                best = max(best, max(sizes) / min(sizes))
    assert rank_quotient(sys, n) == best


def test_constraint_dict_round_trip_and_errors():
    for sys in (NoConstraint(), Cardinality(2), Partition(((0,), (1, 2)), (1, 2)), Matching(3, ((0, 1), (1, 2)))):
        assert constraint_from_dict(sys.to_dict()) == sys
    with pytest.raises(ConstraintError, match="k"):
        constraint_from_dict({"type": "cardinality"})
    with pytest.raises(ConstraintError, match="type"):
        constraint_from_dict({"type": "spanning-tree"})


def test_restrict():
    sys = Matching(3, ((0, 1), (1, 2), (0, 2)))
    assert sys.restrict([0, 2]) == Matching(3, ((0, 1), (0, 2)))
