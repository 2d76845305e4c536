"""Independence systems with membership oracles, and rank quotients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .valuation import members, to_mask


class ConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class NoConstraint:
    type = "none"

    def independent_mask(self, mask: int) -> bool:
        return True

    def to_dict(self) -> dict:
        return {"type": "none"}

    def restrict(self, kept: Sequence[int]) -> "NoConstraint":
        return self


@dataclass(frozen=True)
class Cardinality:
    k: int

    type = "cardinality"

    def independent_mask(self, mask: int) -> bool:
        return mask.bit_count() <= self.k

    def to_dict(self) -> dict:
        return {"type": "cardinality", "k": self.k}

    def restrict(self, kept: Sequence[int]) -> "Cardinality":
        return self


@dataclass(frozen=True)
class Partition:
    """Partition matroid: at most ``caps[j]`` agents from ``parts[j]``.

    Agents listed in no part are unconstrained.
    """

    parts: tuple[tuple[int, ...], ...]
    caps: tuple[int, ...]

    type = "partition"

    def __post_init__(self):
        if len(self.parts) != len(self.caps):
            raise ConstraintError("constraint.caps: must have one cap per part")
        seen: set[int] = set()
        for part in self.parts:
            if seen & set(part):
                raise ConstraintError("constraint.parts: parts must be disjoint")
            seen |= set(part)
        object.__setattr__(self, "_part_masks", tuple(to_mask(p) for p in self.parts))

    def independent_mask(self, mask: int) -> bool:
        return all((mask & pm).bit_count() <= cap for pm, cap in zip(self._part_masks, self.caps))

    def to_dict(self) -> dict:
        return {"type": "partition", "parts": [list(p) for p in self.parts], "caps": list(self.caps)}

    def restrict(self, kept: Sequence[int]) -> "Partition":
        where = {old: new for new, old in enumerate(kept)}
        parts = tuple(tuple(where[i] for i in p if i in where) for p in self.parts)
        return Partition(parts, self.caps)


@dataclass(frozen=True)
class Matching:
    """Agent ``i`` owns edge ``agent_edge[i]``; feasible sets are matchings."""

    vertices: int
    agent_edge: tuple[tuple[int, int], ...]

    type = "matching"

    def __post_init__(self):
        for u, v in self.agent_edge:
            if u == v or not (0 <= u < self.vertices and 0 <= v < self.vertices):
                raise ConstraintError("constraint.agent_edge: invalid edge")

    def independent_mask(self, mask: int) -> bool:
        used = 0
        for i in members(mask):
            u, v = self.agent_edge[i]
            ends = (1 << u) | (1 << v)
            if used & ends:
                return False
            used |= ends
        return True

    def to_dict(self) -> dict:
        return {"type": "matching", "vertices": self.vertices, "agent_edge": [list(e) for e in self.agent_edge]}

    def restrict(self, kept: Sequence[int]) -> "Matching":
        return Matching(self.vertices, tuple(self.agent_edge[i] for i in kept))


@dataclass(frozen=True)
class Family:
    """Downward closure of an explicit list of sets.

    Not part of the instance file format; used for systems such as the
    vertex-independent sets of a graph that have no concrete class here.
    """

    sets: tuple[tuple[int, ...], ...]

    type = "family"

    def __post_init__(self):
        object.__setattr__(self, "_masks", tuple(to_mask(s) for s in self.sets))

    def independent_mask(self, mask: int) -> bool:
        return mask == 0 or any(mask & m == mask for m in self._masks)

    def to_dict(self) -> dict:
        return {"type": "family", "sets": [list(s) for s in self.sets]}

    def restrict(self, kept: Sequence[int]) -> "Family":
        where = {old: new for new, old in enumerate(kept)}
        return Family(tuple(tuple(where[i] for i in s if i in where) for s in self.sets))


ConstraintSpec = NoConstraint | Cardinality | Partition | Matching | Family


def vertex_independent_sets(vertices: int, edges: Iterable[tuple[int, int]]) -> Family:
    """Independent-set system of a graph whose agents are its vertices."""
    adj = [0] * vertices
    for u, v in edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    sets = []
    for mask in range(1 << vertices):
        if all(not (adj[u] & mask) for u in members(mask)):
            sets.append(tuple(members(mask)))
    return Family(tuple(sets))


def constraint_from_dict(d: dict) -> ConstraintSpec:
    kind = d.get("type")
    try:
        if kind == "none":
            return NoConstraint()
        if kind == "cardinality":
            k = int(d["k"])
            if k < 0:
                raise ConstraintError("constraint.k: must be non-negative")
            return Cardinality(k)
        if kind == "partition":
            parts = tuple(tuple(int(i) for i in p) for p in d["parts"])
            caps = tuple(int(c) for c in d["caps"])
            if any(c < 0 for c in caps):
                raise ConstraintError("constraint.caps: must be non-negative")
            return Partition(parts, caps)
        if kind == "matching":
            return Matching(int(d["vertices"]), tuple((int(u), int(v)) for u, v in d["agent_edge"]))
        if kind == "family":
            return Family(tuple(tuple(int(i) for i in s) for s in d["sets"]))
    except KeyError as exc:
        raise ConstraintError(f"constraint.{exc.args[0]}: missing field") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConstraintError):
            raise
        raise ConstraintError(f"constraint: malformed {kind} spec ({exc})") from None
    raise ConstraintError(f"constraint.type: unknown constraint type {kind!r}")


def is_independent(sys: ConstraintSpec, S: Iterable[int]) -> bool:
    return sys.independent_mask(to_mask(S))


def is_downward_closed(sys: ConstraintSpec, n: int) -> bool:
    for mask in range(1 << n):
        if sys.independent_mask(mask):
            for i in members(mask):
                if not sys.independent_mask(mask & ~(1 << i)):
                    return False
    return sys.independent_mask(0)


def rank_quotient(sys: ConstraintSpec, n: int) -> float:
    """Exact max over ground subsets X of ur(X)/lr(X), by enumeration.

    ur/lr are the largest/smallest maximal independent subsets of X.  Sets
    whose only basis is empty are skipped.
    """
    if n > 16:
        raise ValueError("rank_quotient is exhaustive and needs n <= 16; estimate by sampling instead")
    full = (1 << n) - 1
    indep = [sys.independent_mask(m) for m in range(1 << n)]
    ur = [0] * (1 << n)
    lr = [n + 1] * (1 << n)
    for I in range(1 << n):
        if not indep[I]:
            continue
        ext = 0
        for e in range(n):
            be = 1 << e
            if not I & be and indep[I | be]:
                ext |= be
        # I is a basis of every X with I <= X <= full \ ext
        free = full & ~ext & ~I
        size = I.bit_count()
        sub = free
        while True:
            X = I | sub
            if size > ur[X]:
                ur[X] = size
            if size < lr[X]:
                lr[X] = size
            if sub == 0:
                break
            sub = (sub - 1) & free
    best = 1.0
    for X in range(1, 1 << n):
        if lr[X] > 0:
            best = max(best, ur[X] / lr[X])
    return best
