"""Named verification suites at configurable scale.

``SCOPES["desk"]`` is what ``bfmech verify`` runs by default; ``"full"``
matches the acceptance thresholds.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .generators import FAMILIES, random_constraint, random_coverage, random_cut, random_additive, random_instance, with_constraint
from .indep import Cardinality
from .mechanisms import MECHANISMS
from .model import Instance
from .subroutines import brute_force_opt
from .valuation import Additive, Xos, ValueOracle, check_submodular, generate_xos_hard_pair, hard_pair_sizes, to_mask
from . import verify

SUITES = ("truthfulness", "feasibility", "sampling-lemma", "feige", "ratios", "submodularity", "hard-pair")


@dataclass(frozen=True)
class Scope:
    truth_instances: int
    truth_tapes: int
    truth_max_n: int
    feasibility_pairs: int
    payment_winners: int
    lemma_instances: int
    lemma_trials: int
    feige_instances: int
    feige_trials: int
    ratio_instances: int
    ratio_tapes: int
    submod_n: int
    hard_pair_samples: int


SCOPES = {
    "desk": Scope(20, 4, 8, 100, 30, 5, 2000, 5, 1000, 4, 200, 8, 200),
    "full": Scope(200, 20, 10, 500, 100, 5, 10000, 5, 4000, 50, 2000, 8, 1000),
}


def _rng(seed: int, tag: str) -> random.Random:
    return random.Random(f"{seed}:{tag}")


def truth_instances(seed: int, family: str, count: int, max_n: int, tag: str = "truth") -> list[Instance]:
    rng = _rng(seed, f"{tag}-{family}")
    out = []
    for k in range(count):
        n = rng.randint(1, max_n)
        s = rng.randrange(2**31)
        inst = random_instance(family, n, s, budget_frac=rng.uniform(0.15, 0.6))
        out.append(with_constraint(inst, random_constraint(n, s)))
    return out


def _applicable(mech_id: str, family: str) -> bool:
    return not (MECHANISMS[mech_id].needs_monotone and family == "cut")


def suite_truthfulness(seed: int, scope: Scope, broken: bool = False) -> list[verify.VerificationReport]:
    reports = []
    mechs = ["first-price-greedy"] if broken else list(MECHANISMS)
    for family in FAMILIES:
        insts = truth_instances(seed, family, scope.truth_instances, scope.truth_max_n)
        tapes = range(seed, seed + scope.truth_tapes)
        for mech_id in mechs:
            if not broken and not _applicable(mech_id, family):
                continue
            r = verify.check_truthfulness(mech_id, insts, tapes)
            r.name += f"[{family}]"
            r.statistics["instances"] = len(insts)
            r.statistics["tapes"] = scope.truth_tapes
            reports.append(r)
            if broken:
                continue
            r = verify.check_output_invariance(mech_id, insts, tapes)
            r.name += f"[{family}]"
            reports.append(r)
    if not broken:
        reports.append(suite_payment_search(seed, scope))
    return reports


def suite_payment_search(seed: int, scope: Scope) -> verify.VerificationReport:
    """Bisection vs explicit prices, spread over mechanisms and families."""
    combined = verify.VerificationReport("payment-search")
    per_mech = math.ceil(scope.payment_winners / len(MECHANISMS))
    errs = []
    for mech_id in MECHANISMS:
        family = "coverage" if MECHANISMS[mech_id].needs_monotone else "cut"
        insts = truth_instances(seed, family, 40, 10, tag="pay")
        r = verify.check_payment_search(mech_id, insts, range(seed, seed + 10), max_winners=per_mech)
        combined.trials += r.trials
        for v in r.violations:
            combined.violate(mechanism=mech_id, **v)
        errs.append(r.statistics["max_rel_error"])
        combined.statistics[f"winners[{mech_id}]"] = r.trials
    combined.statistics["max_rel_error"] = max(errs)
    return combined


def suite_feasibility(seed: int, scope: Scope) -> list[verify.VerificationReport]:
    reports = []
    tapes = 10
    for mech_id in MECHANISMS:
        fams = [f for f in FAMILIES if _applicable(mech_id, f)]
        per_family = math.ceil(scope.feasibility_pairs / tapes / len(fams))
        total = verify.VerificationReport(f"feasibility[{mech_id}]")
        for family in fams:
            insts = truth_instances(seed, family, per_family, 10, tag="feas")
            r = verify.check_budget_ir_feasibility(mech_id, insts, range(seed, seed + tapes))
            total.trials += r.trials
            for v in r.violations:
                total.violate(family=family, **v)
        reports.append(total)
    return reports


def lemma_instances(seed: int, count: int) -> list[tuple[ValueOracle, list[int], int, str]]:
    """(oracle, T, k, label) triples satisfying v(T) >= k * max singleton."""
    rng = _rng(seed, "lemma")
    out = []
    out.append((ValueOracle(Additive((1.0,) * 12)), list(range(12)), 2, "additive-uniform"))
    out.append((random_additive(12, rng.randrange(2**31)).oracle(), list(range(12)), 2, "additive-random"))
    tries = 0
    while len(out) < count:
        tries += 1
        inst = random_coverage(12, universe=48, seed=rng.randrange(2**31))
        o = inst.oracle()
        vT = o.value(range(12))
        top = max(o.value([i]) for i in range(12))
        if vT >= 3 * top:
            out.append((o, list(range(12)), 3, f"coverage-{tries}"))
    return out


def suite_sampling_lemma(seed: int, scope: Scope) -> list[verify.VerificationReport]:
    reports = []
    for j, (o, T, k, label) in enumerate(lemma_instances(seed, scope.lemma_instances)):
        r = verify.check_sampling_lemma(o, T, k, scope.lemma_trials, seed=seed + j)
        r.name += f"[{label}]"
        reports.append(r)
    return reports


def suite_feige(seed: int, scope: Scope) -> list[verify.VerificationReport]:
    rng = _rng(seed, "feige")
    reports = []
    for j in range(scope.feige_instances):
        inst = random_cut(12, p=rng.uniform(0.2, 0.7), seed=rng.randrange(2**31))
        r = verify.check_feige_bound(inst.oracle(), range(12), scope.feige_trials, seed=seed + j)
        r.name += f"[cut-{j}]"
        reports.append(r)
    return reports


def ratio_instances(seed: int, mech_id: str, count: int) -> list[Instance]:
    rng = _rng(seed, f"ratio-{mech_id}")
    out = []
    for k in range(count):
        n = rng.randint(6, 12)
        s = rng.randrange(2**31)
        if mech_id == "monsm-constrained":
            inst = random_coverage(n, seed=s, budget_frac=rng.uniform(0.2, 0.5))
            cons = Cardinality(max(1, n // 3)) if k % 2 == 0 else random_constraint(n, s, "matching")
        elif mech_id == "gensm-constrained":
            inst = random_cut(n, seed=s, budget_frac=rng.uniform(0.2, 0.5))
            cons = Cardinality(max(1, n // 3)) if k % 2 == 0 else random_constraint(n, s, "matching")
        else:
            inst = random_cut(n, seed=s, budget_frac=rng.uniform(0.2, 0.5))
            cons = None
        out.append(with_constraint(inst, cons) if cons is not None else inst)
    return out


def suite_ratios(seed: int, scope: Scope) -> list[verify.VerificationReport]:
    reports = []
    for mech_id in ("gensm-main", "gensm-online", "monsm-constrained", "gensm-constrained"):
        insts = ratio_instances(seed, mech_id, scope.ratio_instances)
        tapes = range(seed, seed + scope.ratio_tapes)
        orders = range(seed + 10**6, seed + 10**6 + scope.ratio_tapes)
        if mech_id in ("monsm-constrained", "gensm-constrained"):
            # report each p separately so each gets its own ceiling
            for label, sel in (("p=1", 0), ("p<=2", 1)):
                r = verify.measure_ratio(mech_id, insts[sel::2], tapes, orders)
                r.name += f"[{label}]"
                reports.append(r)
        else:
            r = verify.measure_ratio(mech_id, insts, tapes, orders)
            r.name += "[cut]"
            reports.append(r)
    return reports


def xos_violation_fixture() -> Xos:
    """Two 0/1 tables on three agents: agent 0 adds nothing to {2} but 1 to {1, 2}."""
    return Xos(((0.0, 0.0, 1.0), (1.0, 1.0, 0.0)))


def suite_submodularity(seed: int, scope: Scope) -> list[verify.VerificationReport]:
    reports = []
    n = scope.submod_n
    for family in FAMILIES:
        inst = random_instance(family, n, seed)
        res = check_submodular(inst.oracle(), n, "exhaustive")
        r = verify.VerificationReport(f"submodularity[{family}]", trials=sum(res.checked.values()))
        r.statistics.update(checked=res.checked, tight=res.tight)
        if not res.passed:
            r.violate(**res.counterexample)
        reports.append(r)
    fx = xos_violation_fixture()
    res = check_submodular(ValueOracle(fx), fx.n_agents, "exhaustive")
    r = verify.VerificationReport("submodularity[xos-fixture-expected-failure]", trials=sum(res.checked.values()))
    r.statistics.update(detected=not res.passed, counterexample=res.counterexample)
    if res.passed or res.counterexample.get("form") != "i":
        r.violate(detail="XOS fixture was expected to fail diminishing marginals")
    reports.append(r)
    return reports


def suite_hard_pair(seed: int, scope: Scope, n: int = 16, epsilon: float = 1.0) -> list[verify.VerificationReport]:
    r = verify.VerificationReport(f"hard-pair[n={n},eps={epsilon}]")
    inst1, inst2, R = generate_xos_hard_pair(n, epsilon, seed)
    tau, rho = hard_pair_sizes(n, epsilon)
    o1, o2 = inst1.oracle(), inst2.oracle()
    opt1 = brute_force_opt(o1, inst1.costs, inst1.budget, unconstrained=True).value
    opt2 = brute_force_opt(o2, inst2.costs, inst2.budget, unconstrained=True).value
    ratio = opt2 / opt1
    expected = n ** (1 - epsilon / 2)
    r.statistics.update(tau=tau, rho=rho, opt_v1=opt1, opt_v2=opt2, ratio=ratio, expected=expected)
    if abs(ratio - expected) > 1e-9 * expected:
        r.violate(detail=f"opt ratio {ratio} != {expected}")
    rng = _rng(seed, "hard-pair")
    Rm = to_mask(R)
    full = (1 << n) - 1
    checked = 0
    while checked < scope.hard_pair_samples:
        S = rng.getrandbits(n) & full
        if S & ~Rm == 0:
            continue  # S inside R
        checked += 1
        a, b = o1.value_mask(S), o2.value_mask(S)
        if a != b:
            r.violate(S=sorted(i for i in range(n) if S >> i & 1), v1=a, v2=b)
    r.trials = checked
    return [r]


def run_suite(name: str, seed: int, scope: Scope, broken: bool = False, submod_n: int | None = None) -> list[verify.VerificationReport]:
    if submod_n is not None:
        scope = Scope(**{**scope.__dict__, "submod_n": submod_n})
    if name == "all":
        out = []
        for s in SUITES:
            out.extend(run_suite(s, seed, scope))
        return out
    if name == "truthfulness":
        return suite_truthfulness(seed, scope, broken)
    if name == "feasibility":
        return suite_feasibility(seed, scope)
    if name == "sampling-lemma":
        return suite_sampling_lemma(seed, scope)
    if name == "feige":
        return suite_feige(seed, scope)
    if name == "ratios":
        return suite_ratios(seed, scope)
    if name == "submodularity":
        return suite_submodularity(seed, scope)
    if name == "hard-pair":
        return suite_hard_pair(seed, scope)
    raise ValueError(f"unknown suite {name!r}")
