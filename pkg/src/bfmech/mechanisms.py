"""Budget-feasible procurement mechanisms with threshold payments.

Every mechanism is a deterministic function of (instance, bids, tape).  Each
agent is examined at most once and offered a take-it-or-leave-it price
that does not depend on its own bid; that price is its threshold payment
if it ends up in the returned set.

Agents bidding above the budget are dropped up front, keeping their
original ids, so payments are always reported against the caller's ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .indep import ConstraintSpec, NoConstraint
from .model import (
    BUDGET,
    COST,
    INDEPENDENCE,
    NONPOSITIVE_MARGINAL,
    OVER_BUDGET_COST,
    SAMPLE_HALF,
    Instance,
    MechanismOutcome,
    RandomTape,
    Trace,
    draw_arrival_order,
    draw_tape,
)
from .subroutines import SolverResult, _best_singleton, _constrained_greedy, _double_greedy, dynkin
from .valuation import ValueOracle, members

BETA_MAIN = 9.185
BETA_ONLINE = 8.725
BETA_MONOTONE_CONSTRAINED = 13 / 3
BETA_CONSTRAINED = 8.5

SINGLETON_PROB_MAIN = 0.201
DYNKIN_PROB_ONLINE = 0.4
SINGLETON_PROB_MONOTONE_CONSTRAINED = 0.2
SINGLETON_PROB_CONSTRAINED = 1 / 3

# cumulative probabilities of the online output choice S1, S2, T1, T2
ONLINE_CHOICE_CDF = (0.1, 0.2, 0.6, 1.0)
CANDIDATE_NAMES = ("S1", "S2", "T1", "T2")


class MechanismError(ValueError):
    pass


@dataclass
class GreedyState:
    S: list[int]  # bitmasks S1, S2
    budgets: list[float]
    U: int
    x: float
    beta: float
    B: float

    @property
    def rate(self) -> float:
        return self.beta * self.B / self.x


def _setup(instance: Instance, bids: Sequence[float] | None):
    bids = instance.costs if bids is None else tuple(float(b) for b in bids)
    if len(bids) != instance.n:
        raise MechanismError(f"expected {instance.n} bids, got {len(bids)}")
    trace = Trace()
    active = 0
    for i, b in enumerate(bids):
        if b <= instance.budget:
            active |= 1 << i
        else:
            trace.rejected[i] = OVER_BUDGET_COST
    return bids, active, instance.oracle(), trace


def _outcome(instance: Instance, oracle: ValueOracle, winners: int, prices: dict[int, float], trace: Trace) -> MechanismOutcome:
    payments = [0.0] * instance.n
    for i in members(winners):
        payments[i] = prices[i]
    value = oracle.value_mask(winners)
    return MechanismOutcome(frozenset(members(winners)), tuple(payments), value, oracle.queries, trace)


def _singleton_branch(instance, oracle, active, trace, sys: ConstraintSpec | None = None):
    trace.branch = "singleton"
    best = _best_singleton(oracle, active, None, instance.budget, sys or NoConstraint())
    # threshold is the budget: any bid up to B keeps the winner
    prices = {i: instance.budget for i in members(best)}
    return _outcome(instance, oracle, best, prices, trace)


def _split(active: int, tape: RandomTape) -> tuple[int, int]:
    A1 = 0
    for i in members(active):
        if tape.in_first_half(i):
            A1 |= 1 << i
    return A1, active & ~A1


def _estimate(instance: Instance, oracle: ValueOracle, A1: int, bids, kind: str, seed: int) -> float:
    """Value of the sample-side solution; this is the rate estimate x.

    Memoized per instance on (kind, A1, bids of A1, seed), which is all it
    depends on.  Query counts are charged as if it were recomputed.
    """
    idx = members(A1)
    key = (kind, A1, tuple(bids[i] for i in idx), seed)
    cache = instance._estimate_cache
    hit = cache.get(key)
    if hit is not None:
        oracle.queries += hit[1]
        return hit[0]
    start = oracle.queries
    if kind == "knapsack":
        mask = _constrained_greedy(oracle, A1, bids, instance.budget, NoConstraint(), False, seed)
    else:
        mask = _constrained_greedy(oracle, A1, bids, instance.budget, instance.constraint, kind == "monotone", seed)
    x = oracle.value_mask(mask)
    cache[key] = (x, oracle.queries - start)
    return x


def _mark(trace: Trace, mask: int, reason: str) -> None:
    for i in members(mask):
        trace.rejected.setdefault(i, reason)


def _reject_reason(bid: float, price: float) -> str:
    return COST if bid > price else BUDGET


def _two_set_greedy(
    oracle: ValueOracle,
    state: GreedyState,
    bids: Sequence[float],
    trace: Trace,
    prices: dict[int, float],
    sys: ConstraintSpec | None = None,
) -> None:
    """Grow S1 and S2 together, always examining the best (agent, set) pair.

    Only pairs keeping the set independent are eligible when ``sys`` is
    given.  The loop ends once no eligible pair has positive marginal.
    Ties go to the smaller set index, then the smaller agent index.
    """
    val = oracle.value_mask
    rate = state.rate
    S, budgets = state.S, state.budgets
    while state.U:
        best_m, bi, bj = -math.inf, -1, -1
        cand = members(state.U)
        for j in (0, 1):
            Sj = S[j]
            base = val(Sj)
            for i in cand:
                bit = 1 << i
                if sys is not None and not sys.independent_mask(Sj | bit):
                    continue
                m = val(Sj | bit) - base
                if m > best_m:
                    best_m, bi, bj = m, i, j
        if bi < 0 or not best_m > 0:
            break
        price = rate * best_m
        trace.examined.append((bi, bj + 1))
        trace.offers[bi] = price
        if bids[bi] <= price <= budgets[bj]:
            S[bj] |= 1 << bi
            budgets[bj] -= price
            prices[bi] = price
        else:
            trace.rejected[bi] = _reject_reason(bids[bi], price)
        state.U &= ~(1 << bi)
    if state.U:
        if sys is None:
            _mark(trace, state.U, NONPOSITIVE_MARGINAL)
        else:
            for i in members(state.U):
                feasible = any(sys.independent_mask(S[j] | 1 << i) for j in (0, 1))
                trace.rejected.setdefault(i, NONPOSITIVE_MARGINAL if feasible else INDEPENDENCE)


def _best_of_four(oracle: ValueOracle, S1: int, S2: int, sub_seed: int, trace: Trace) -> int:
    T1 = _double_greedy(oracle, S1, 8 * sub_seed + 3)
    T2 = _double_greedy(oracle, S2, 8 * sub_seed + 4)
    trace.S1, trace.S2, trace.T1, trace.T2 = members(S1), members(S2), members(T1), members(T2)
    best, best_val, name = S1, oracle.value_mask(S1), "S1"
    for cand, label in ((S2, "S2"), (T1, "T1"), (T2, "T2")):
        v = oracle.value_mask(cand)
        if v > best_val:
            best, best_val, name = cand, v, label
    trace.chosen = name
    return best


def _simultaneous_greedy_masks(oracle, D, bids, B, x, beta, sub_seed, trace, sys=None):
    state = GreedyState([0, 0], [B, B], D, x, beta, B)
    prices: dict[int, float] = {}
    _two_set_greedy(oracle, state, bids, trace, prices, sys)
    trace.B1, trace.B2 = state.budgets
    best = _best_of_four(oracle, state.S[0], state.S[1], sub_seed, trace)
    return best, prices, state


@dataclass
class SimultaneousGreedyResult:
    S1: frozenset[int]
    S2: frozenset[int]
    T1: frozenset[int]
    T2: frozenset[int]
    S: frozenset[int]
    prices: dict[int, float]
    budgets: tuple[float, float]
    trace: Trace


def simultaneous_greedy(
    oracle: ValueOracle,
    D,
    costs: Sequence[float],
    B: float,
    x: float,
    beta: float = BETA_MAIN,
    tape_seed: int = 0,
) -> SimultaneousGreedyResult:
    """Run the two-set threshold greedy on agent set D with rate estimate x.

    ``prices`` holds the acceptance price of every agent accepted into S1
    or S2; for members of the returned S these are the threshold payments.
    """
    if not x > 0:
        raise MechanismError("x must be positive")
    Dm = D if isinstance(D, int) else sum(1 << i for i in D)
    trace = Trace(branch="greedy", x=x)
    best, prices, state = _simultaneous_greedy_masks(oracle, Dm, costs, B, x, beta, tape_seed, trace)
    return SimultaneousGreedyResult(
        frozenset(trace.S1),
        frozenset(trace.S2),
        frozenset(trace.T1),
        frozenset(trace.T2),
        frozenset(members(best)),
        prices,
        tuple(state.budgets),
        trace,
    )


# --------------------------------------------------------------------------
# offline mechanisms


def gensm_main(
    instance: Instance,
    bids: Sequence[float] | None,
    tape: RandomTape,
    *,
    singleton_prob: float = SINGLETON_PROB_MAIN,
    beta: float = BETA_MAIN,
) -> MechanismOutcome:
    """Best singleton with probability 0.201, otherwise sample-then-greedy.

    The sample half A1 only sets the rate estimate x and always loses.
    """
    bids, active, oracle, trace = _setup(instance, bids)
    if tape.branch_coin < singleton_prob:
        return _singleton_branch(instance, oracle, active, trace)
    trace.branch = "greedy"
    A1, A2 = _split(active, tape)
    _mark(trace, A1, SAMPLE_HALF)
    x = _estimate(instance, oracle, A1, bids, "knapsack", tape.sub_seed)
    trace.x = x
    if not x > 0:
        trace.branch = "empty-sample"
        return _outcome(instance, oracle, 0, {}, trace)
    best, prices, _ = _simultaneous_greedy_masks(oracle, A2, bids, instance.budget, x, beta, tape.sub_seed, trace)
    return _outcome(instance, oracle, best, prices, trace)


def sample_then_greedy(instance: Instance, bids: Sequence[float] | None, tape: RandomTape) -> MechanismOutcome:
    """The greedy branch of GenSm-Main on its own."""
    return gensm_main(instance, bids, tape, singleton_prob=0.0)


def monsm_constrained(
    instance: Instance,
    bids: Sequence[float] | None,
    tape: RandomTape,
    *,
    singleton_prob: float = SINGLETON_PROB_MONOTONE_CONSTRAINED,
    beta: float = BETA_MONOTONE_CONSTRAINED,
) -> MechanismOutcome:
    """Single-set threshold greedy under a budget and an independence system.

    Requires a monotone valuation.
    """
    if not instance.valuation.is_monotone():
        raise MechanismError("monsm-constrained requires a monotone valuation")
    sys = instance.constraint
    bids, active, oracle, trace = _setup(instance, bids)
    if tape.branch_coin < singleton_prob:
        return _singleton_branch(instance, oracle, active, trace, sys)
    trace.branch = "greedy"
    B = instance.budget
    A1, A2 = _split(active, tape)
    _mark(trace, A1, SAMPLE_HALF)
    x = _estimate(instance, oracle, A1, bids, "monotone", tape.sub_seed)
    trace.x = x
    if not x > 0:
        trace.branch = "empty-sample"
        return _outcome(instance, oracle, 0, {}, trace)
    rate = beta * B / x
    S, remaining, U = 0, B, A2
    prices: dict[int, float] = {}
    val = oracle.value_mask
    while U:
        base = val(S)
        best_m, bi = -math.inf, -1
        for i in members(U):
            m = val(S | 1 << i) - base
            if m > best_m:
                best_m, bi = m, i
        price = rate * best_m
        trace.examined.append((bi, 1))
        trace.offers[bi] = price
        bid = bids[bi]
        if bid <= price <= remaining and sys.independent_mask(S | 1 << bi):
            S |= 1 << bi
            remaining -= price
            prices[bi] = price
        elif bid > price or price > remaining:
            trace.rejected[bi] = _reject_reason(bid, price)
        else:
            trace.rejected[bi] = INDEPENDENCE
        U &= ~(1 << bi)
    trace.S1 = members(S)
    trace.B1 = remaining
    trace.chosen = "S1"
    return _outcome(instance, oracle, S, prices, trace)


def gensm_constrained(
    instance: Instance,
    bids: Sequence[float] | None,
    tape: RandomTape,
    *,
    singleton_prob: float = SINGLETON_PROB_CONSTRAINED,
    beta: float = BETA_CONSTRAINED,
) -> MechanismOutcome:
    """Two-set threshold greedy restricted to independent (agent, set) pairs."""
    sys = instance.constraint
    bids, active, oracle, trace = _setup(instance, bids)
    if tape.branch_coin < singleton_prob:
        return _singleton_branch(instance, oracle, active, trace, sys)
    trace.branch = "greedy"
    B = instance.budget
    A1, A2 = _split(active, tape)
    _mark(trace, A1, SAMPLE_HALF)
    x = _estimate(instance, oracle, A1, bids, "general", tape.sub_seed)
    trace.x = x
    if not x > 0:
        trace.branch = "empty-sample"
        return _outcome(instance, oracle, 0, {}, trace)
    best, prices, _ = _simultaneous_greedy_masks(oracle, A2, bids, B, x, beta, tape.sub_seed, trace, sys)
    return _outcome(instance, oracle, best, prices, trace)


# --------------------------------------------------------------------------
# online


def _online_choice(s_choice: float) -> int:
    for k, edge in enumerate(ONLINE_CHOICE_CDF):
        if s_choice < edge:
            return k
    return len(ONLINE_CHOICE_CDF) - 1


def gensm_online(
    instance: Instance,
    bids: Sequence[float] | None,
    arrival_order: Sequence[int],
    tape: RandomTape,
    *,
    dynkin_prob: float = DYNKIN_PROB_ONLINE,
    beta: float = BETA_ONLINE,
) -> MechanismOutcome:
    """Secretary-model mechanism: Dynkin's rule or a one-pass two-set greedy.

    ``bids`` are indexed by agent id; ``arrival_order`` lists agent ids in
    arrival order.  The sample is the first xi arrivals, xi being the
    number of heads on the tape, whatever those agents bid.
    """
    n = instance.n
    if sorted(arrival_order) != list(range(n)):
        raise MechanismError("arrival_order must be a permutation of the agents")
    bids, active, oracle, trace = _setup(instance, bids)
    B = instance.budget
    if tape.branch_coin < dynkin_prob:
        trace.branch = "dynkin"
        vals = [oracle.value_mask(1 << i) if active >> i & 1 else None for i in arrival_order]
        k = dynkin(vals)
        winner = 0 if k is None else 1 << arrival_order[k]
        prices = {i: B for i in members(winner)}
        return _outcome(instance, oracle, winner, prices, trace)

    trace.branch = "greedy"
    choice = _online_choice(tape.s_choice)
    trace.chosen = CANDIDATE_NAMES[choice]
    xi = tape.xi
    A1 = 0
    for i in arrival_order[:xi]:
        A1 |= 1 << i
    _mark(trace, A1, SAMPLE_HALF)
    x = _estimate(instance, oracle, A1 & active, bids, "knapsack", tape.sub_seed)
    trace.x = x
    sets = [0, 0, 0, 0]  # S1, S2, T1, T2
    budgets = [B, B]
    prices: dict[int, float] = {}
    val = oracle.value_mask
    rate = beta * B / x if x > 0 else 0.0
    for i in arrival_order[xi:]:
        if not active >> i & 1:
            continue
        if not x > 0:
            continue
        bit = 1 << i
        m1 = val(sets[0] | bit) - val(sets[0])
        m2 = val(sets[1] | bit) - val(sets[1])
        j, m = (0, m1) if m1 >= m2 else (1, m2)
        price = rate * m
        trace.examined.append((i, j + 1))
        trace.offers[i] = price
        if bids[i] <= price <= budgets[j]:
            sets[j] |= bit
            budgets[j] -= price
            prices[i] = price
            if tape.t_coins[i]:
                sets[2 + j] |= bit
        else:
            trace.rejected[i] = _reject_reason(bids[i], price)
    if not x > 0:
        trace.branch = "empty-sample"
    trace.S1, trace.S2, trace.T1, trace.T2 = (members(s) for s in sets)
    trace.B1, trace.B2 = budgets
    return _outcome(instance, oracle, sets[choice], prices, trace)


def sks_run(instance: Instance, arrival_order: Sequence[int], tape: RandomTape) -> SolverResult:
    """Non-strategic knapsack secretary: the online mechanism on true costs."""
    out = gensm_online(instance, instance.costs, arrival_order, tape)
    return SolverResult(out.winners, out.value, out.queries)


# --------------------------------------------------------------------------
# payments by search


def payments_by_bid_search(
    mechanism: Callable[[Instance, Sequence[float], RandomTape], MechanismOutcome],
    instance: Instance,
    bids: Sequence[float],
    tape: RandomTape,
    winner: int,
    rel_precision: float = 1e-9,
) -> float:
    """Supremum bid in [bid, B] at which ``winner`` still wins, by bisection."""
    bids = list(bids)
    B = instance.budget

    def wins(b: float) -> bool:
        trial = bids.copy()
        trial[winner] = b
        return winner in mechanism(instance, trial, tape).winners

    if not wins(bids[winner]):
        raise MechanismError(f"agent {winner} does not win at its bid")
    if wins(B):
        return B
    lo, hi = bids[winner], B
    while hi - lo > rel_precision * B:
        mid = 0.5 * (lo + hi)
        if wins(mid):
            lo = mid
        else:
            hi = mid
    return lo


# --------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class MechanismSpec:
    id: str
    run: Callable[..., MechanismOutcome]
    online: bool = False
    needs_monotone: bool = False
    uses_constraint: bool = False


MECHANISMS: dict[str, MechanismSpec] = {
    "sample-then-greedy": MechanismSpec("sample-then-greedy", sample_then_greedy),
    "gensm-main": MechanismSpec("gensm-main", gensm_main),
    "gensm-online": MechanismSpec("gensm-online", gensm_online, online=True),
    "monsm-constrained": MechanismSpec("monsm-constrained", monsm_constrained, needs_monotone=True, uses_constraint=True),
    "gensm-constrained": MechanismSpec("gensm-constrained", gensm_constrained, uses_constraint=True),
}


def get_mechanism(mech_id: str) -> MechanismSpec:
    try:
        return MECHANISMS[mech_id]
    except KeyError:
        raise MechanismError(f"unknown mechanism {mech_id!r}; choose from {', '.join(MECHANISMS)}") from None


def check_compatible(mech_id: str, instance: Instance) -> None:
    spec = get_mechanism(mech_id)
    if spec.needs_monotone and not instance.valuation.is_monotone():
        raise MechanismError(f"{mech_id} requires a monotone valuation; got {instance.valuation.type}")


def bound_mechanism(mech_id: str, order: Sequence[int] | None = None):
    """Adapt a registered mechanism to the uniform (instance, bids, tape) call."""
    spec = get_mechanism(mech_id)
    if not spec.online:
        return spec.run

    def run(instance, bids, tape):
        arr = order if order is not None else tuple(range(instance.n))
        return spec.run(instance, bids, arr, tape)

    return run


def run_mechanism(
    mech_id: str,
    instance: Instance,
    bids: Sequence[float] | None,
    seed: int,
    order_seed: int | None = None,
) -> MechanismOutcome:
    tape = draw_tape(seed, instance.n)
    order = draw_arrival_order(seed if order_seed is None else order_seed, instance.n)
    return bound_mechanism(mech_id, order)(instance, bids, tape)
