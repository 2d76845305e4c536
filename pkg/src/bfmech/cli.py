"""Command line entry point: ``bfmech gen | run | verify``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .generators import FAMILIES, random_constraint, random_instance, with_constraint
from .indep import NoConstraint
from .mechanisms import MECHANISMS, MechanismError, check_compatible, run_mechanism
from .model import Instance, InstanceError, load_instance, save_instance
from .subroutines import brute_force_opt
from .suites import SCOPES, SUITES, run_suite
from .valuation import generate_xos_hard_pair

CSV_HEADER = ["mechanism", "seed", "n", "value", "opt", "ratio", "total_payment", "budget", "queries", "winner_count"]


class UsageError(Exception):
    pass


def _master_seed(default: int) -> int:
    env = os.environ.get("BFM_SEED")
    if env is None or env == "":
        return default
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"BFM_SEED must be an integer, got {env!r}") from None


def _parse_seeds(text: str) -> list[int]:
    """``"5"`` means seeds 0..4; ``"3:8"`` means 3..7; ``"1,4,9"`` is explicit."""
    try:
        if ":" in text:
            a, b = text.split(":")
            return list(range(int(a), int(b)))
        if "," in text:
            return [int(s) for s in text.split(",")]
        return list(range(int(text)))
    except ValueError:
        raise UsageError(f"--seeds: cannot parse {text!r}") from None


def _budget_kw(args) -> dict:
    if args.budget is not None and args.budget_frac is not None:
        raise UsageError("give at most one of --budget and --budget-frac")
    if args.budget is not None:
        return {"budget": args.budget}
    if args.budget_frac is not None:
        return {"budget_frac": args.budget_frac}
    return {}


def _generate(args) -> Instance:
    kw = _budget_kw(args)
    if args.family == "cut" and args.p is not None:
        kw["p"] = args.p
    inst = random_instance(args.family, args.n, args.gen_seed, **kw)
    if args.constraint != "none":
        inst = with_constraint(inst, random_constraint(args.n, args.gen_seed, args.constraint))
    return inst


# --------------------------------------------------------------------------
# gen


def cmd_gen(args) -> int:
    out = Path(args.out)
    if args.family == "xos-hard":
        inst1, inst2, R = generate_xos_hard_pair(args.n, args.eps, args.gen_seed)
        stem = out.with_suffix("")
        save_instance(inst1, f"{stem}.v1.json")
        save_instance(inst2, f"{stem}.v2.json")
        with open(f"{stem}.R.json", "w") as fh:
            json.dump({"R": list(R)}, fh)
            fh.write("\n")
        return 0
    save_instance(_generate(args), out)
    return 0


# --------------------------------------------------------------------------
# run


@dataclass(frozen=True)
class RunConfig:
    mechanism: str
    instance: Instance
    seeds: tuple[int, ...]
    order_seed: int | None
    with_opt: bool


def _order_seed(order_seed: int | None, seed: int) -> int:
    return seed if order_seed is None else order_seed * 1_000_003 + seed


def _one_run(cfg: RunConfig, seed: int, opt: float | None) -> tuple[list, dict]:
    inst = cfg.instance
    out = run_mechanism(cfg.mechanism, inst, inst.costs, seed, _order_seed(cfg.order_seed, seed))
    ratio = ""
    if opt is not None:
        ratio = repr(opt / out.value) if out.value > 0 else "inf"
    row = [
        cfg.mechanism,
        seed,
        inst.n,
        repr(out.value),
        "" if opt is None else repr(opt),
        ratio,
        repr(out.total_payment),
        repr(inst.budget),
        out.queries,
        len(out.winners),
    ]
    return row, out.to_dict()


def _run_chunk(cfg: RunConfig, seeds: list[int], opt: float | None):
    return [_one_run(cfg, s, opt) for s in seeds]


def execute_run(cfg: RunConfig, jobs: int = 1) -> list[tuple[list, dict]]:
    """Rows sorted by seed regardless of scheduling."""
    opt = None
    if cfg.with_opt:
        sys_ = cfg.instance.constraint if MECHANISMS[cfg.mechanism].uses_constraint else NoConstraint()
        inst = cfg.instance
        opt = brute_force_opt(inst.oracle(), inst.costs, inst.budget, sys_).value
    seeds = sorted(cfg.seeds)
    if jobs <= 1 or len(seeds) < 2:
        results = _run_chunk(cfg, seeds, opt)
    else:
        chunks = [seeds[k::jobs] for k in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_chunk, [cfg] * len(chunks), chunks, [opt] * len(chunks)))
        results = [r for part in parts for r in part]
    results.sort(key=lambda r: r[0][1])
    return results


def cmd_run(args) -> int:
    if (args.instance is None) == (args.family is None):
        raise UsageError("give exactly one of --instance and --family")
    if args.instance is not None:
        inst = load_instance(args.instance)
    else:
        if args.n is None:
            raise UsageError("--family requires --n")
        inst = _generate(args)
    check_compatible(args.mechanism, inst)
    start = _master_seed(0)
    seeds = [s + start for s in _parse_seeds(args.seeds)]
    cfg = RunConfig(args.mechanism, inst, tuple(seeds), args.order_seed, args.opt)
    results = execute_run(cfg, args.jobs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row, _ in results:
        w.writerow(row)
    _emit(buf.getvalue(), args.out)
    if args.json:
        detail = [dict(seed=row[1], **d) for row, d in results]
        with open(args.json, "w") as fh:
            json.dump(detail, fh, indent=1)
            fh.write("\n")
    return 0


# --------------------------------------------------------------------------
# verify


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def cmd_verify(args) -> int:
    seed = _master_seed(args.seed)
    reports = run_suite(args.suite, seed, SCOPES[args.scope], broken=args.broken, submod_n=args.n)
    doc = {
        "suite": args.suite,
        "seed": seed,
        "scope": args.scope,
        "passed": all(r.passed for r in reports),
        "reports": [_jsonable(r.to_dict()) for r in reports],
    }
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    _emit(text, args.out)
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "passed", "trials", "violations"])
        for r in reports:
            w.writerow([r.name, int(r.passed), r.trials, r.statistics.get("violation_count", 0)])
        _emit(buf.getvalue(), args.csv)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name} trials={r.trials}", file=sys.stderr)
    return 0 if doc["passed"] else 1


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# --------------------------------------------------------------------------


def _add_instance_options(p: argparse.ArgumentParser, family_required: bool) -> None:
    p.add_argument("--n", type=int, required=family_required, help="number of agents")
    p.add_argument("--p", type=float, default=None, help="edge probability for cut graphs")
    # `gen` has no run seeds, so plain --seed is unambiguous there
    seed_flags = ["--gen-seed", "--seed"] if family_required else ["--gen-seed"]
    p.add_argument(*seed_flags, dest="gen_seed", type=int, default=0, help="seed for the instance generator")
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--budget-frac", type=float, default=None, help="budget as a fraction of total cost")
    p.add_argument(
        "--constraint",
        choices=["none", "cardinality", "partition", "matching"],
        default="none",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bfmech", description="Budget-feasible procurement mechanisms.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a random instance file")
    g.add_argument("family", choices=list(FAMILIES) + ["xos-hard"])
    _add_instance_options(g, family_required=True)
    g.add_argument("--eps", type=float, default=1.0, help="epsilon for xos-hard")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run a mechanism over a range of seeds")
    r.add_argument("--mechanism", required=True, choices=sorted(MECHANISMS))
    r.add_argument("--instance", default=None, help="instance JSON file")
    r.add_argument("--family", default=None, choices=list(FAMILIES))
    _add_instance_options(r, family_required=False)
    r.add_argument("--seeds", default="10", help="N, A:B or a comma list")
    r.add_argument("--order-seed", type=int, default=None)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--opt", action="store_true", help="also compute the brute-force optimum")
    r.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    r.add_argument("--json", default=None, help="per-seed outcome and trace as JSON")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=list(SUITES) + ["all"])
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--scope", choices=sorted(SCOPES), default="desk")
    v.add_argument("--n", type=int, default=None, help="agents for the submodularity sweep")
    v.add_argument("--broken", action="store_true", help="audit a deliberately non-truthful mechanism")
    v.add_argument("--out", default=None, help="JSON report path (stdout if omitted)")
    v.add_argument("--csv", default=None, help="CSV summary path")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InstanceError, MechanismError, OSError) as exc:
        print(f"bfmech: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
