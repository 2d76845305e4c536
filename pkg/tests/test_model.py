import json

import pytest

from bfmech import Additive, Instance, draw_tape, load_instance, preprocess, save_instance
from bfmech.generators import random_constraint, random_cut, with_constraint
from bfmech.indep import Cardinality
from bfmech.model import InstanceError, MechanismOutcome, draw_arrival_order, forced_tape


def _inst(costs, B):
    return Instance(costs, B, Additive(tuple(float(i + 1) for i in range(len(costs)))))


def test_preprocess_drops_expensive_agents_and_keeps_ids():
    out = preprocess(_inst([2, 15, 3], 10))
    assert out.kept == (0, 2)
    assert out.costs == (2.0, 3.0)
    # weights follow their agents
    assert out.valuation.weights == (1.0, 3.0)


def test_preprocess_identity_and_empty():
    inst = _inst([1, 2], 10)
    assert preprocess(inst) is inst
    empty = preprocess(_inst([11, 12], 10))
    assert empty.n == 0 and empty.kept == ()


def test_preprocess_idempotent():
    once = preprocess(_inst([2, 15, 3, 40], 10))
    assert preprocess(once) == once


def test_preprocess_composes_original_ids():
    inst = preprocess(_inst([2, 15, 3, 4], 10))
    inner = preprocess(inst.with_costs((2.0, 30.0, 4.0)))
    assert inner.kept == (0, 3)


def test_tape_deterministic():
    assert draw_tape(7, 5) == draw_tape(7, 5)


def test_tapes_differ_across_seeds():
    same = sum(draw_tape(s, 5) == draw_tape(s + 1, 5) for s in range(100))
    assert same == 0


def test_tape_empty():
    t = draw_tape(3, 0)
    assert t.partition_coins == () and t.xi_draws == () and t.t_coins == ()
    assert 0.0 <= t.branch_coin < 1.0 and 0.0 <= t.s_choice < 1.0
    assert t.xi == 0


def test_tape_coins_do_not_depend_on_n():
    small, big = draw_tape(11, 4), draw_tape(11, 9)
    assert big.partition_coins[:4] == small.partition_coins
    assert big.t_coins[:4] == small.t_coins
    assert big.branch_coin == small.branch_coin


def test_forced_tape():
    t = forced_tape(3, first_half=[1], xi=2)
    assert [t.in_first_half(i) for i in range(3)] == [False, True, False]
    assert t.xi == 2


def test_arrival_order_is_permutation():
    order = draw_arrival_order(5, 8)
    assert sorted(order) == list(range(8))
    assert order == draw_arrival_order(5, 8)


def test_minimal_additive_file(tmp_path):
    p = tmp_path / "i.json"
    p.write_text(json.dumps({"n": 2, "budget": 10, "costs": [1, 2], "valuation": {"type": "additive", "weights": [5, 3]}}))
    inst = load_instance(p)
    assert inst.n == 2 and inst.valuation == Additive((5.0, 3.0))


def test_round_trip(tmp_path):
    inst = random_cut(7, seed=3)
    inst = with_constraint(inst, random_constraint(7, 3, "matching"))
    p = tmp_path / "c.json"
    save_instance(inst, p)
    assert load_instance(p) == inst


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"budget": 0}, "budget"),
        ({"budget": "x"}, "budget"),
        ({"costs": [1, -1]}, "costs"),
        ({"costs": [1]}, "costs"),
        ({"valuation": {"type": "additive"}}, "weights"),
        ({"valuation": {"type": "quadratic"}}, "type"),
        ({"constraint": {"type": "cardinality"}}, "k"),
    ],
)
def test_malformed_file_names_field(tmp_path, patch, field):
    doc = {"n": 2, "budget": 10, "costs": [1, 2], "valuation": {"type": "additive", "weights": [5, 3]}}
    doc.update(patch)
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(InstanceError, match=field):
        load_instance(p)


def test_missing_field(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"n": 1, "costs": [1], "valuation": {"type": "additive", "weights": [1]}}))
    with pytest.raises(InstanceError, match="budget"):
        load_instance(p)


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(InstanceError):
        load_instance(p)


def test_agent_count_mismatch():
    with pytest.raises(InstanceError, match="valuation"):
        Instance((1.0,), 1.0, Additive((1.0, 2.0)))


def test_outcome_serializes():
    out = MechanismOutcome(frozenset({1}), (0.0, 2.5), 3.0, 4)
    d = out.to_dict()
    assert d["winners"] == [1] and d["total_payment"] == 2.5
    json.dumps(d)


def test_instance_with_constraint_round_trips_through_dict():
    inst = with_constraint(_inst([1, 1, 1], 5), Cardinality(2))
    assert Instance.from_dict(inst.to_dict()) == inst
