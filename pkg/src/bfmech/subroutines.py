"""Auxiliary optimizers used by the mechanisms.

The knapsack estimators here are greedy stand-ins for the literature
algorithms.  They only ever see the sampled-out half of the agents, so
their quality affects approximation ratios but never incentives.
"""

from __future__ import annotations

import functools
import math
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .indep import ConstraintSpec, NoConstraint
from .valuation import ValueOracle, members, to_mask

BRUTE_FORCE_MAX_N = 20


@dataclass(frozen=True)
class SolverResult:
    chosen: frozenset[int]
    value: float
    queries: int = 0


def _as_mask(D) -> int:
    return D if isinstance(D, int) else to_mask(D)


def _result(oracle: ValueOracle, mask: int, start: int) -> SolverResult:
    value = oracle.value_mask(mask)
    return SolverResult(frozenset(members(mask)), value, oracle.queries - start)


# --------------------------------------------------------------------------
# exact


def brute_force_opt(
    oracle: ValueOracle,
    costs: Sequence[float],
    B: float,
    sys: ConstraintSpec | None = None,
    unconstrained: bool = False,
    agents: Iterable[int] | None = None,
) -> SolverResult:
    """Exhaustive optimum over subsets of ``agents`` (default: all).

    Ties go to the lexicographically smallest sorted member tuple.
    """
    sys = sys or NoConstraint()
    D = to_mask(range(oracle.n)) if agents is None else _as_mask(agents)
    if D.bit_count() > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force needs at most {BRUTE_FORCE_MAX_N} agents")
    start = oracle.queries
    best_mask, best_val, best_key = 0, oracle.value_mask(0), ()
    sub = D
    while sub:
        ok = sys.independent_mask(sub)
        if ok and not unconstrained:
            ok = math.fsum(costs[i] for i in members(sub)) <= B
        if ok:
            val = oracle.value_mask(sub)
            if val > best_val or (val == best_val and tuple(members(sub)) < best_key):
                best_mask, best_val, best_key = sub, val, tuple(members(sub))
        sub = (sub - 1) & D
    return SolverResult(frozenset(members(best_mask)), best_val, oracle.queries - start)


# --------------------------------------------------------------------------
# unconstrained


@functools.lru_cache(maxsize=4096)
def _coins(seed: int, length: int) -> tuple[float, ...]:
    rng = random.Random(seed)
    return tuple(rng.random() for _ in range(length))


def _double_greedy(oracle: ValueOracle, D: int, seed: int) -> int:
    if D == 0:
        return 0
    # prefix-stable: agent i gets the same coin whatever D is
    coins = _coins(seed, max(D.bit_length(), 32))
    X, Y = 0, D
    val = oracle.value_mask
    for i in members(D):
        bit = 1 << i
        a = val(X | bit) - val(X)
        b = val(Y & ~bit) - val(Y)
        a_pos, b_pos = max(a, 0.0), max(b, 0.0)
        if a_pos + b_pos == 0.0 or coins[i] < a_pos / (a_pos + b_pos):
            X |= bit
        else:
            Y &= ~bit
    return X


def double_greedy_unconstrained(oracle: ValueOracle, D: Iterable[int] | int, tape_seed: int) -> SolverResult:
    """Randomized double greedy over D in increasing index order.

    Agent i is kept with probability a+/(a+ + b+), where a is its marginal
    on the growing set and b the gain from dropping it from the shrinking
    one (0/0 keeps it).  Each agent's coin is indexed by its id.
    """
    start = oracle.queries
    return _result(oracle, _double_greedy(oracle, _as_mask(D), tape_seed), start)


# --------------------------------------------------------------------------
# knapsack (+ independence) greedy


def _density_greedy(oracle: ValueOracle, D: int, costs: Sequence[float], B: float, sys: ConstraintSpec) -> int:
    """Marginal-per-cost greedy; agents that become unusable are dropped for good."""
    S = 0
    remaining = B
    val = oracle.value_mask
    cand = [i for i in members(D) if costs[i] <= B and sys.independent_mask(1 << i)]
    while cand:
        base = val(S)
        best_key, best_i = None, -1
        keep = []
        for i in cand:
            c = costs[i]
            if c > remaining:
                continue
            if not sys.independent_mask(S | (1 << i)):
                continue
            m = val(S | (1 << i)) - base
            if not m > 0:
                continue
            keep.append(i)
            # zero-cost agents first, by marginal; otherwise by density, then lowest index
            key = (math.inf, m, -i) if c == 0 else (m / c, 0.0, -i)
            if best_key is None or key > best_key:
                best_key, best_i = key, i
        if best_i < 0:
            break
        S |= 1 << best_i
        remaining -= costs[best_i]
        cand = [i for i in keep if i != best_i]
    return S


def _best_singleton(oracle: ValueOracle, D: int, costs: Sequence[float] | None, B: float, sys: ConstraintSpec) -> int:
    best, best_val = 0, -math.inf
    for i in members(D):
        if costs is not None and costs[i] > B:
            continue
        if not sys.independent_mask(1 << i):
            continue
        v = oracle.value_mask(1 << i)
        if v > best_val:
            best, best_val = 1 << i, v
    return best


def _constrained_greedy(oracle, D, costs, B, sys, monotone, seed) -> int:
    first = _density_greedy(oracle, D, costs, B, sys)
    cands = [first]
    if not monotone:
        second = _density_greedy(oracle, D & ~first, costs, B, sys)
        cands.append(second)
        # subsets of independent sets are independent, so no pruning is needed
        cands.append(_double_greedy(oracle, first, 8 * seed + 1))
        cands.append(_double_greedy(oracle, second, 8 * seed + 2))
    cands.insert(1 if monotone else 2, _best_singleton(oracle, D, costs, B, sys))
    best, best_val = 0, oracle.value_mask(0)
    for c in cands:
        v = oracle.value_mask(c)
        if v > best_val:
            best, best_val = c, v
    return best


def constrained_greedy(
    oracle: ValueOracle,
    D: Iterable[int] | int,
    costs: Sequence[float],
    B: float,
    sys: ConstraintSpec | None = None,
    monotone: bool = True,
    tape_seed: int = 0,
) -> SolverResult:
    """Budgeted density greedy that keeps every partial solution independent.

    With ``monotone=False`` a second pass runs on the agents the first pass
    left out, and both passes are refined by double greedy.  The best
    candidate (including the best feasible singleton) is returned.
    """
    start = oracle.queries
    mask = _constrained_greedy(oracle, _as_mask(D), costs, B, sys or NoConstraint(), monotone, tape_seed)
    return _result(oracle, mask, start)


def two_pass_knapsack(
    oracle: ValueOracle, D: Iterable[int] | int, costs: Sequence[float], B: float, tape_seed: int = 0
) -> SolverResult:
    """Two density-greedy passes plus unconstrained refinement, knapsack only."""
    return constrained_greedy(oracle, D, costs, B, NoConstraint(), monotone=False, tape_seed=tape_seed)


# --------------------------------------------------------------------------
# online / sampling


def dynkin(values_in_arrival_order: Sequence[float | None]) -> int | None:
    """Classic secretary rule: skip the first floor(n/e), then take the first
    value at least the sample maximum.  ``None`` marks an arrival that was
    rejected outright; it neither sets the bar nor can be picked.
    """
    n = len(values_in_arrival_order)
    m = int(math.floor(n / math.e))
    sample = [v for v in values_in_arrival_order[:m] if v is not None]
    bar = max(sample) if sample else -math.inf
    for k in range(m, n):
        v = values_in_arrival_order[k]
        if v is not None and v >= bar:
            return k
    return None


def random_half(D: Iterable[int], coins: Sequence[int]) -> frozenset[int]:
    return frozenset(i for i in D if coins[i])
