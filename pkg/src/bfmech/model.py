"""Instances, random tapes, mechanism outcomes and the instance file format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .indep import ConstraintError, ConstraintSpec, NoConstraint, constraint_from_dict
from .valuation import ValuationError, ValuationSpec, ValueOracle, spec_from_dict


class InstanceError(ValueError):
    """Raised for malformed or invalid instance data; names the field."""


@dataclass(frozen=True)
class Instance:
    costs: tuple[float, ...]
    budget: float
    valuation: ValuationSpec
    constraint: ConstraintSpec = NoConstraint()
    # original agent ids after preprocessing; None means identity
    kept: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "costs", tuple(float(c) for c in self.costs))
        object.__setattr__(self, "budget", float(self.budget))
        if not self.budget > 0:
            raise InstanceError("budget: must be positive")
        if any(not c >= 0 for c in self.costs):
            raise InstanceError("costs: every cost must be non-negative")
        if self.valuation.n_agents != len(self.costs) and not (len(self.costs) == 0 and self.valuation.n_agents == 0):
            raise InstanceError(
                f"valuation: describes {self.valuation.n_agents} agents but costs has {len(self.costs)}"
            )
        if self.kept is not None and len(self.kept) != len(self.costs):
            raise InstanceError("kept: must have one entry per agent")

    @property
    def n(self) -> int:
        return len(self.costs)

    @cached_property
    def _value_cache(self) -> dict:
        return {}

    @cached_property
    def _estimate_cache(self) -> dict:
        return {}

    def oracle(self) -> ValueOracle:
        """Fresh counting oracle; memoized values are shared per instance."""
        return ValueOracle(self.valuation, self.n, self._value_cache)

    def original_id(self, i: int) -> int:
        return i if self.kept is None else self.kept[i]

    def with_costs(self, costs: Sequence[float]) -> "Instance":
        return Instance(tuple(costs), self.budget, self.valuation, self.constraint, self.kept)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "budget": self.budget,
            "costs": list(self.costs),
            "valuation": self.valuation.to_dict(),
            "constraint": self.constraint.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        if not isinstance(d, dict):
            raise InstanceError("instance: top level must be an object")
        for key in ("n", "budget", "costs", "valuation"):
            if key not in d:
                raise InstanceError(f"{key}: missing field")
        try:
            n = int(d["n"])
        except (TypeError, ValueError):
            raise InstanceError("n: must be an integer") from None
        try:
            budget = float(d["budget"])
        except (TypeError, ValueError):
            raise InstanceError("budget: must be a number") from None
        if not isinstance(d["costs"], list):
            raise InstanceError("costs: must be a list")
        try:
            costs = tuple(float(c) for c in d["costs"])
        except (TypeError, ValueError):
            raise InstanceError("costs: entries must be numbers") from None
        if len(costs) != n:
            raise InstanceError(f"costs: expected {n} entries, got {len(costs)}")
        if not isinstance(d["valuation"], dict):
            raise InstanceError("valuation: must be an object")
        try:
            valuation = spec_from_dict(d["valuation"])
            constraint = constraint_from_dict(d.get("constraint", {"type": "none"}))
        except (ValuationError, ConstraintError) as exc:
            raise InstanceError(str(exc)) from None
        return cls(costs, budget, valuation, constraint)


def preprocess(instance: Instance) -> Instance:
    """Drop agents whose declared cost exceeds the budget.

    The result keeps the original agent ids in ``kept`` so payments can be
    mapped back.
    """
    idx = [i for i, c in enumerate(instance.costs) if c <= instance.budget]
    if len(idx) == instance.n:
        return instance
    kept = tuple(instance.original_id(i) for i in idx)
    return Instance(
        tuple(instance.costs[i] for i in idx),
        instance.budget,
        instance.valuation.restrict(idx),
        instance.constraint.restrict(idx),
        kept,
    )


def load_instance(path: str | Path) -> Instance:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"instance: invalid JSON ({exc})") from None
    return Instance.from_dict(data)


def save_instance(instance: Instance, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(instance.to_dict(), fh, indent=1)
        fh.write("\n")


# --------------------------------------------------------------------------
# randomness


@dataclass(frozen=True)
class RandomTape:
    """All random decisions of one mechanism run, drawn before any bid is read.

    Per-agent entries are indexed by agent id and each field comes from its
    own stream, so agent ``i``'s coins do not depend on ``n`` or on how many
    draws any other field consumed.
    """

    seed: int
    branch_coin: float
    partition_coins: tuple[float, ...]
    xi_draws: tuple[int, ...]
    t_coins: tuple[int, ...]
    s_choice: float
    sub_seed: int

    @property
    def xi(self) -> int:
        return sum(self.xi_draws)

    def in_first_half(self, i: int) -> bool:
        return self.partition_coins[i] < 0.5


def _stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, tag]))


def draw_tape(seed: int, n: int) -> RandomTape:
    if n < 0:
        raise ValueError("n must be non-negative")
    return RandomTape(
        seed=seed,
        branch_coin=float(_stream(seed, 0).random()),
        partition_coins=tuple(float(u) for u in _stream(seed, 1).random(n)),
        xi_draws=tuple(int(b) for b in _stream(seed, 2).integers(0, 2, n)),
        t_coins=tuple(int(b) for b in _stream(seed, 3).integers(0, 2, n)),
        s_choice=float(_stream(seed, 4).random()),
        sub_seed=int(_stream(seed, 5).integers(0, 2**31 - 1)),
    )


def forced_tape(n: int, *, branch_coin=0.99, first_half=(), xi=None, t_coins=None, s_choice=0.0, sub_seed=0) -> RandomTape:
    """Hand-built tape for pinning a specific execution path."""
    first_half = set(first_half)
    xi = 0 if xi is None else xi
    return RandomTape(
        seed=-1,
        branch_coin=branch_coin,
        partition_coins=tuple(0.25 if i in first_half else 0.75 for i in range(n)),
        xi_draws=tuple(1 if k < xi else 0 for k in range(n)),
        t_coins=tuple(t_coins) if t_coins is not None else tuple(1 for _ in range(n)),
        s_choice=s_choice,
        sub_seed=sub_seed,
    )


def draw_arrival_order(seed: int, n: int) -> tuple[int, ...]:
    return tuple(int(i) for i in _stream(seed, 6).permutation(n))


# --------------------------------------------------------------------------
# outcomes

COST = "COST"
BUDGET = "BUDGET"
INDEPENDENCE = "INDEPENDENCE"
NONPOSITIVE_MARGINAL = "NONPOSITIVE_MARGINAL"
SAMPLE_HALF = "SAMPLE_HALF"
OVER_BUDGET_COST = "OVER_BUDGET_COST"


@dataclass
class Trace:
    branch: str = ""
    x: float | None = None
    S1: list[int] = field(default_factory=list)
    S2: list[int] = field(default_factory=list)
    T1: list[int] = field(default_factory=list)
    T2: list[int] = field(default_factory=list)
    B1: float | None = None
    B2: float | None = None
    chosen: str = ""
    # agent -> reason tag
    rejected: dict[int, str] = field(default_factory=dict)
    # (agent, set index) in the order examined
    examined: list[tuple[int, int]] = field(default_factory=list)
    # agent -> take-it-or-leave-it price offered when examined
    offers: dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "branch": self.branch,
            "x": self.x,
            "S1": self.S1,
            "S2": self.S2,
            "T1": self.T1,
            "T2": self.T2,
            "B1": self.B1,
            "B2": self.B2,
            "chosen": self.chosen,
            "rejected": {str(k): v for k, v in sorted(self.rejected.items())},
            "examined": [list(p) for p in self.examined],
            "offers": {str(k): v for k, v in sorted(self.offers.items())},
        }


@dataclass
class MechanismOutcome:
    winners: frozenset[int]
    payments: tuple[float, ...]
    value: float
    queries: int
    trace: Trace = field(default_factory=Trace)

    @property
    def total_payment(self) -> float:
        return float(sum(self.payments))

    def key(self) -> tuple:
        """Comparable summary used for bit-identity checks."""
        return (tuple(sorted(self.winners)), self.payments, self.value)

    def to_dict(self) -> dict:
        return {
            "winners": sorted(self.winners),
            "payments": list(self.payments),
            "value": self.value,
            "queries": self.queries,
            "total_payment": self.total_payment,
            "trace": self.trace.to_dict(),
        }
