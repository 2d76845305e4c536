"""Set-function value oracles.

Sets of agents are handled internally as integer bitmasks (bit ``i`` set
means agent ``i`` is in the set).  The public ``value``/``marginal`` calls
accept any iterable of agent indices; the ``*_mask`` variants are the hot
path used by the mechanisms.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class ValuationError(ValueError):
    pass


def to_mask(S: Iterable[int]) -> int:
    mask = 0
    for i in S:
        mask |= 1 << i
    return mask


def members(mask: int) -> list[int]:
    """Sorted agent indices in a bitmask."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


# --------------------------------------------------------------------------
# valuation specs


@dataclass(frozen=True)
class Additive:
    weights: tuple[float, ...]

    type = "additive"

    @property
    def n_agents(self) -> int:
        return len(self.weights)

    def is_monotone(self) -> bool:
        return all(w >= 0 for w in self.weights)

    def evaluate(self, mask: int) -> float:
        w = self.weights
        return float(sum(w[i] for i in members(mask)))

    def to_dict(self) -> dict:
        return {"type": "additive", "weights": list(self.weights)}

    def restrict(self, kept: Sequence[int]) -> "Additive":
        return Additive(tuple(self.weights[i] for i in kept))


@dataclass(frozen=True)
class Cut:
    """Weighted cut function; agent ``i`` owns vertex ``agent_vertex[i]``.

    v(S) is the total weight of edges with exactly one endpoint among the
    vertices owned by S.
    """

    vertices: int
    edges: tuple[tuple[int, int, float], ...]
    agent_vertex: tuple[int, ...]

    type = "cut"

    @property
    def n_agents(self) -> int:
        return len(self.agent_vertex)

    def is_monotone(self) -> bool:
        return False

    def evaluate(self, mask: int) -> float:
        owned = set(self.agent_vertex[i] for i in members(mask))
        total = 0.0
        for u, v, w in self.edges:
            if (u in owned) != (v in owned):
                total += w
        return total

    def to_dict(self) -> dict:
        return {
            "type": "cut",
            "vertices": self.vertices,
            "edges": [[u, v, w] for u, v, w in self.edges],
            "agent_vertex": list(self.agent_vertex),
        }

    def restrict(self, kept: Sequence[int]) -> "Cut":
        return Cut(self.vertices, self.edges, tuple(self.agent_vertex[i] for i in kept))


@dataclass(frozen=True)
class Coverage:
    element_weights: tuple[float, ...]
    agent_sets: tuple[tuple[int, ...], ...]

    type = "coverage"

    @property
    def n_agents(self) -> int:
        return len(self.agent_sets)

    def is_monotone(self) -> bool:
        return all(w >= 0 for w in self.element_weights)

    def evaluate(self, mask: int) -> float:
        covered: set[int] = set()
        for i in members(mask):
            covered.update(self.agent_sets[i])
        w = self.element_weights
        return float(sum(w[e] for e in sorted(covered)))

    def to_dict(self) -> dict:
        return {
            "type": "coverage",
            "element_weights": list(self.element_weights),
            "agent_sets": [list(s) for s in self.agent_sets],
        }

    def restrict(self, kept: Sequence[int]) -> "Coverage":
        return Coverage(self.element_weights, tuple(self.agent_sets[i] for i in kept))


@dataclass(frozen=True)
class Xos:
    """Pointwise maximum of additive tables; v(empty set) is 0 by convention.

    Tables may hold negative entries, so the value of a non-empty set can be
    negative unless some table dominates it.
    """

    tables: tuple[tuple[float, ...], ...]
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)

    type = "xos"

    def __post_init__(self):
        n = len(self.tables[0]) if self.tables else 0
        if any(len(t) != n for t in self.tables):
            raise ValuationError("valuation.tables: rows must have equal length")
        object.__setattr__(self, "_matrix", np.asarray(self.tables, dtype=float).reshape(len(self.tables), n))

    @property
    def n_agents(self) -> int:
        return self._matrix.shape[1]

    def is_monotone(self) -> bool:
        return bool(np.all(self._matrix >= 0))

    def evaluate(self, mask: int) -> float:
        if mask == 0 or self._matrix.shape[0] == 0:
            return 0.0
        idx = members(mask)
        return float(self._matrix[:, idx].sum(axis=1).max())

    def to_dict(self) -> dict:
        return {"type": "xos", "tables": [list(t) for t in self.tables]}

    def restrict(self, kept: Sequence[int]) -> "Xos":
        return Xos(tuple(tuple(t[i] for i in kept) for t in self.tables))


ValuationSpec = Additive | Cut | Coverage | Xos


def spec_from_dict(d: dict) -> ValuationSpec:
    kind = d.get("type")
    try:
        if kind == "additive":
            return Additive(tuple(float(w) for w in d["weights"]))
        if kind == "cut":
            nv = int(d["vertices"])
            edges = tuple((int(u), int(v), float(w)) for u, v, w in d["edges"])
            av = tuple(int(a) for a in d["agent_vertex"])
            for u, v, _ in edges:
                if not (0 <= u < nv and 0 <= v < nv):
                    raise ValuationError("valuation.edges: vertex out of range")
            if any(not 0 <= a < nv for a in av):
                raise ValuationError("valuation.agent_vertex: vertex out of range")
            return Cut(nv, edges, av)
        if kind == "coverage":
            ew = tuple(float(w) for w in d["element_weights"])
            sets = tuple(tuple(sorted(set(int(e) for e in s))) for s in d["agent_sets"])
            if any(not 0 <= e < len(ew) for s in sets for e in s):
                raise ValuationError("valuation.agent_sets: element out of range")
            return Coverage(ew, sets)
        if kind == "xos":
            return Xos(tuple(tuple(float(x) for x in t) for t in d["tables"]))
    except KeyError as exc:
        raise ValuationError(f"valuation.{exc.args[0]}: missing field") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValuationError):
            raise
        raise ValuationError(f"valuation: malformed {kind} spec ({exc})") from None
    raise ValuationError(f"valuation.type: unknown valuation type {kind!r}")


# --------------------------------------------------------------------------
# oracle


class ValueOracle:
    """Counting value oracle over ``n`` agents.

    Values are memoized in ``cache``, which may be shared between clones of
    the same valuation; the query counter is per oracle and counts every
    evaluation request, cached or not.
    """

    def __init__(self, spec: ValuationSpec, n: int | None = None, cache: dict | None = None):
        self.spec = spec
        self.n = spec.n_agents if n is None else n
        self.queries = 0
        self._cache = {} if cache is None else cache

    def clone(self) -> "ValueOracle":
        return ValueOracle(self.spec, self.n, self._cache)

    def value_mask(self, mask: int) -> float:
        self.queries += 1
        try:
            return self._cache[mask]
        except KeyError:
            if mask >> self.n:
                raise IndexError(f"agent index out of range for n={self.n}") from None
            val = 0.0 if mask == 0 else self.spec.evaluate(mask)
            self._cache[mask] = val
            return val

    def marginal_mask(self, i: int, mask: int) -> float:
        bit = 1 << i
        if mask & bit:
            raise ValueError(f"agent {i} already in the set")
        return self.value_mask(mask | bit) - self.value_mask(mask)

    def value(self, S: Iterable[int]) -> float:
        S = list(S)
        if any(i < 0 or i >= self.n for i in S):
            raise IndexError(f"agent index out of range for n={self.n}")
        return self.value_mask(to_mask(S))

    def marginal(self, i: int, S: Iterable[int]) -> float:
        S = list(S)
        if i in S:
            raise ValueError(f"agent {i} already in the set")
        if i < 0 or i >= self.n:
            raise IndexError(f"agent index out of range for n={self.n}")
        return self.marginal_mask(i, to_mask(S))

    def table(self) -> np.ndarray:
        """All 2**n values indexed by bitmask (not counted as queries)."""
        out = np.empty(1 << self.n)
        for mask in range(1 << self.n):
            v = self._cache.get(mask)
            if v is None:
                v = 0.0 if mask == 0 else self.spec.evaluate(mask)
                self._cache[mask] = v
            out[mask] = v
        return out


# --------------------------------------------------------------------------
# submodularity checks


@dataclass
class SubmodularityReport:
    passed: bool
    mode: str
    checked: dict[str, int]
    counterexample: dict | None = None
    tight: bool = False  # every form (i) inequality held with equality


def _tol(a: float, b: float, rel: float) -> float:
    return rel * max(1.0, abs(a), abs(b))


def check_submodular(
    oracle: ValueOracle,
    n: int | None = None,
    mode: str = "exhaustive",
    samples: int = 1000,
    seed: int = 0,
    rel_tol: float = 1e-9,
) -> SubmodularityReport:
    """Check the three equivalent forms of submodularity.

    Form (i) is v(i|S) >= v(i|T) for S subset of T, i not in T; form (ii)
    is v(S)+v(T) >= v(S|T)+v(S&T); form (iii) bounds v(T) by v(S) plus the
    marginals of T\\S at S minus the marginals of S\\T at (S|T)-i.

    ``exhaustive`` mode checks form (i) along every covering pair S, S+k
    (which implies every nested pair) and forms (ii)/(iii) on all pairs for
    n <= 10; above that the pair forms are sampled.  ``sampled`` mode draws
    ``samples`` random triples and checks all three forms on them.
    """
    n = oracle.n if n is None else n
    if mode == "exhaustive" and n > 14:
        raise ValueError("exhaustive submodularity check requires n <= 14")
    V = oracle.table() if mode == "exhaustive" else None
    checked = {"i": 0, "ii": 0, "iii": 0}
    full = (1 << n) - 1

    def fail(form, **kw):
        return SubmodularityReport(False, mode, checked, {"form": form, **kw})

    if mode == "exhaustive":
        masks = np.arange(1 << n)
        tight = True
        # form (i) on covering pairs: m_i(S) >= m_i(S + k)
        for i in range(n):
            bi = 1 << i
            for k in range(n):
                if k == i:
                    continue
                bk = 1 << k
                S = masks[(masks & (bi | bk)) == 0]
                mS = V[S | bi] - V[S]
                mT = V[S | bk | bi] - V[S | bk]
                checked["i"] += len(S)
                tol = rel_tol * np.maximum(1.0, np.maximum(np.abs(mS), np.abs(mT)))
                bad = np.nonzero(mS < mT - tol)[0]
                if len(bad):
                    s = int(S[bad[0]])
                    return fail("i", i=i, S=members(s), T=members(s | bk),
                                lhs=float(mS[bad[0]]), rhs=float(mT[bad[0]]))
                if tight and np.any(np.abs(mS - mT) > tol):
                    tight = False
        if n <= 10:
            res = _pair_forms_exhaustive(V, n, rel_tol, checked)
            if res is not None:
                return fail(**res)
            return SubmodularityReport(True, mode, checked, tight=tight)
        rng = np.random.default_rng(seed)
        pairs = rng.integers(0, full + 1, size=(samples, 2))
        res = _pair_forms_listed(lambda m: float(V[m]), n, pairs, rel_tol, checked)
        if res is not None:
            return fail(**res)
        return SubmodularityReport(True, mode, checked, tight=tight)

    # sampled
    rng = random.Random(seed)
    val = oracle.value_mask
    triples = []
    for _ in range(samples):
        T = rng.getrandbits(n) if n else 0
        S = T & (rng.getrandbits(n) if n else 0)
        outside = [k for k in range(n) if not T >> k & 1]
        if not outside:
            continue
        i = rng.choice(outside)
        triples.append((S, T, i))
    for S, T, i in triples:
        a = val(S | 1 << i) - val(S)
        b = val(T | 1 << i) - val(T)
        checked["i"] += 1
        if a < b - _tol(a, b, rel_tol):
            return fail("i", i=i, S=members(S), T=members(T), lhs=a, rhs=b)
    pairs = [(rng.getrandbits(n) if n else 0, rng.getrandbits(n) if n else 0) for _ in range(samples)]
    res = _pair_forms_listed(val, n, pairs, rel_tol, checked)
    if res is not None:
        return fail(**res)
    return SubmodularityReport(True, mode, checked)


def _form_iii_rhs(val, n, S, T):
    U = S | T
    rhs = val(S)
    for k in range(n):
        bk = 1 << k
        if T & bk and not S & bk:
            rhs += val(S | bk) - val(S)
        elif S & bk and not T & bk:
            rhs -= val(U) - val(U & ~bk)
    return rhs


def _pair_forms_listed(val, n, pairs, rel_tol, checked):
    for S, T in pairs:
        S, T = int(S), int(T)
        lhs = val(S) + val(T)
        rhs = val(S | T) + val(S & T)
        checked["ii"] += 1
        if lhs < rhs - _tol(lhs, rhs, rel_tol):
            return dict(form="ii", S=members(S), T=members(T), lhs=lhs, rhs=rhs)
        vt = val(T)
        bound = _form_iii_rhs(val, n, S, T)
        checked["iii"] += 1
        if vt > bound + _tol(vt, bound, rel_tol):
            return dict(form="iii", S=members(S), T=members(T), lhs=vt, rhs=bound)
    return None


def _pair_forms_exhaustive(V, n, rel_tol, checked):
    size = 1 << n
    masks = np.arange(size)
    for S in range(size):
        T = masks
        lhs = V[S] + V[T]
        rhs = V[S | T] + V[S & T]
        checked["ii"] += size
        tol = rel_tol * np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
        bad = np.nonzero(lhs < rhs - tol)[0]
        if len(bad):
            t = int(bad[0])
            return dict(form="ii", S=members(S), T=members(t), lhs=float(lhs[t]), rhs=float(rhs[t]))
        U = S | T
        bound = np.full(size, V[S])
        for k in range(n):
            bk = 1 << k
            if S & bk:
                sel = (T & bk) == 0
                bound[sel] -= V[U[sel]] - V[U[sel] & ~bk]
            else:
                sel = (T & bk) != 0
                bound[sel] += V[S | bk] - V[S]
        vt = V[T]
        checked["iii"] += size
        tol = rel_tol * np.maximum(1.0, np.maximum(np.abs(vt), np.abs(bound)))
        bad = np.nonzero(vt > bound + tol)[0]
        if len(bad):
            t = int(bad[0])
            return dict(form="iii", S=members(S), T=members(t), lhs=float(vt[t]), rhs=float(bound[t]))
    return None


# --------------------------------------------------------------------------
# hard XOS pair


def hard_pair_sizes(n: int, epsilon: float) -> tuple[int, int]:
    """(tau, rho) for the hard pair on n agents; both rounded down."""
    if n <= 0 or n % 4:
        raise ValuationError("hard pair needs n > 0 divisible by 4")
    tau_real = n ** (epsilon / 2) / 4
    if tau_real < 1:
        raise ValuationError("hard pair needs n**(epsilon/2)/4 >= 1")
    # guard against 16**0.5/4 landing a hair under an integer
    tau = int(math.floor(tau_real + 1e-12))
    return tau, n // 4


def generate_xos_hard_pair(n: int, epsilon: float, seed: int, max_tables: int = 200_000):
    """Build two XOS instances that agree off a hidden set R.

    v1(S) = min(|S|, tau) is the max over all 0/1 tables with tau ones;
    v2 = max(v1, beta_R) with beta_R equal to 1 on R and -rho off R, where
    R is a uniform random subset of size rho = n/4.  Both instances get
    unit costs and budget n, so the budget never binds.

    Returns ``(inst1, inst2, R)`` with R a sorted tuple.
    """
    from .model import Instance

    tau, rho = hard_pair_sizes(n, epsilon)
    if math.comb(n, tau) > max_tables:
        raise ValuationError(f"hard pair with n={n}, tau={tau} needs too many tables")
    rng = random.Random(seed)
    R = tuple(sorted(rng.sample(range(n), rho)))
    tables = []
    for T in itertools.combinations(range(n), tau):
        row = [0.0] * n
        for i in T:
            row[i] = 1.0
        tables.append(tuple(row))
    beta = tuple(1.0 if i in R else -float(rho) for i in range(n))
    costs = tuple(1.0 for _ in range(n))
    inst1 = Instance(costs, float(n), Xos(tuple(tables)))
    inst2 = Instance(costs, float(n), Xos(tuple(tables) + (beta,)))
    return inst1, inst2, R


def hard_pair_value(S: Iterable[int], tau: int, R: Iterable[int], rho: int, with_beta: bool) -> float:
    """Closed form of the hard-pair valuations, for cross-checking the tables."""
    S = set(S)
    v1 = float(min(len(S), tau))
    if not with_beta:
        return v1
    R = set(R)
    beta = len(S & R) - rho * len(S - R)
    return float(max(v1, beta))
