"""Random instance families."""

from __future__ import annotations

import random

from .indep import Cardinality, ConstraintSpec, Matching, NoConstraint, Partition
from .model import Instance
from .valuation import Additive, Coverage, Cut

FAMILIES = ("cut", "coverage", "additive")


def _costs(rng: random.Random, n: int) -> tuple[float, ...]:
    return tuple(round(rng.uniform(0.1, 1.0), 3) for _ in range(n))


def _budget(costs, budget: float | None, budget_frac: float | None) -> float:
    if budget is not None:
        return float(budget)
    total = sum(costs)
    frac = 0.3 if budget_frac is None else budget_frac
    # no floor at the largest cost: small budgets leave some agents unaffordable
    return max(total * frac, 0.05)


def random_cut(n: int, p: float = 0.4, seed: int = 0, budget=None, budget_frac=None) -> Instance:
    """G(n, p) with uniform(0, 1] edge weights; agent i owns vertex i."""
    rng = random.Random(seed)
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.append((u, v, round(rng.uniform(0.05, 1.0), 3)))
    costs = _costs(rng, n)
    return Instance(costs, _budget(costs, budget, budget_frac), Cut(n, tuple(edges), tuple(range(n))))


def random_coverage(n: int, universe: int | None = None, seed: int = 0, budget=None, budget_frac=None) -> Instance:
    rng = random.Random(seed)
    m = universe if universe is not None else max(2 * n, 1)
    weights = tuple(round(rng.uniform(0.1, 1.0), 3) for _ in range(m))
    sets = []
    for _ in range(n):
        k = rng.randint(1, max(1, m // 3))
        sets.append(tuple(sorted(rng.sample(range(m), k))))
    costs = _costs(rng, n)
    return Instance(costs, _budget(costs, budget, budget_frac), Coverage(weights, tuple(sets)))


def random_additive(n: int, seed: int = 0, budget=None, budget_frac=None) -> Instance:
    rng = random.Random(seed)
    weights = tuple(round(rng.uniform(0.1, 1.0), 3) for _ in range(n))
    costs = _costs(rng, n)
    return Instance(costs, _budget(costs, budget, budget_frac), Additive(weights))


def random_instance(family: str, n: int, seed: int, **kw) -> Instance:
    if family == "cut":
        return random_cut(n, seed=seed, **kw)
    if family == "coverage":
        return random_coverage(n, seed=seed, **kw)
    if family == "additive":
        return random_additive(n, seed=seed, **kw)
    raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")


def random_constraint(n: int, seed: int, kind: str | None = None) -> ConstraintSpec:
    """Cardinality, partition or matching system over n agents."""
    rng = random.Random(seed)
    kind = kind or rng.choice(["cardinality", "partition", "matching"])
    if kind == "none":
        return NoConstraint()
    if kind == "cardinality":
        return Cardinality(rng.randint(1, max(1, n // 2)))
    if kind == "partition":
        nparts = rng.randint(1, max(1, min(3, n)))
        label = [rng.randrange(nparts) for _ in range(n)]
        parts = tuple(tuple(i for i in range(n) if label[i] == p) for p in range(nparts))
        caps = tuple(rng.randint(1, 2) for _ in range(nparts))
        return Partition(parts, caps)
    if kind == "matching":
        nv = max(3, (n + 3) // 2)
        edges = []
        for _ in range(n):
            u, v = rng.sample(range(nv), 2)
            edges.append((min(u, v), max(u, v)))
        return Matching(nv, tuple(edges))
    raise ValueError(f"unknown constraint kind {kind!r}")


def with_constraint(instance: Instance, constraint: ConstraintSpec) -> Instance:
    return Instance(instance.costs, instance.budget, instance.valuation, constraint, instance.kept)
