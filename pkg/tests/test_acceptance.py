"""Acceptance gate at full scale.  Each test prints a PASS/FAIL line in the
terminal summary; the whole module takes a few minutes on one core."""

import subprocess
import sys

import pytest

from bfmech.suites import (
    SCOPES,
    suite_feasibility,
    suite_feige,
    suite_hard_pair,
    suite_payment_search,
    suite_ratios,
    suite_sampling_lemma,
    suite_submodularity,
    suite_truthfulness,
)
from bfmech.mechanisms import MECHANISMS

FULL = SCOPES["full"]
SEED = 42


def _violations(reports):
    return sum(r.statistics.get("violation_count", 0) for r in reports)


@pytest.fixture(scope="module")
def truth_reports():
    return suite_truthfulness(SEED, FULL)


def test_truthfulness(truth_reports, criterion):
    reports = [r for r in truth_reports if r.name.startswith("truthfulness")]
    mechs = {r.name.split("[")[1].rstrip("]") for r in reports}
    families = {r.name.split("[")[2].rstrip("]") for r in reports}
    assert mechs == set(MECHANISMS) and families == {"cut", "coverage", "additive"}
    assert min(r.statistics["instances"] for r in reports) >= 200
    assert min(r.statistics["tapes"] for r in reports) >= 20
    runs = sum(r.statistics["mechanism_runs"] for r in reports)
    bad = _violations(reports)
    criterion(1, "truthfulness", bad == 0, f"{len(reports)} mechanism/family sweeps, {runs} runs, {bad} violations")
    assert bad == 0


def test_budget_ir_feasibility(criterion):
    reports = suite_feasibility(SEED, FULL)
    assert len(reports) == len(MECHANISMS)
    assert min(r.trials for r in reports) >= 500
    bad = _violations(reports)
    criterion(2, "budget / IR / feasibility", bad == 0, f"min {min(r.trials for r in reports)} pairs per mechanism, {bad} violations")
    assert bad == 0


def test_payment_cross_validation(criterion):
    r = suite_payment_search(SEED, FULL)
    assert r.trials >= 100
    err = r.statistics["max_rel_error"]
    criterion(3, "payment cross-validation", r.passed, f"{r.trials} winners, max |error|/B = {err:.2e}")
    assert r.passed and err <= 1e-8


def test_output_invariance(truth_reports, criterion):
    reports = [r for r in truth_reports if r.name.startswith("output-invariance")]
    winners = sum(r.statistics["winners_checked"] for r in reports)
    bad = _violations(reports)
    assert winners >= 100
    criterion(4, "output invariance", bad == 0, f"{winners} winners, {bad} violations")
    assert bad == 0


def test_ratio_ceilings(criterion):
    reports = suite_ratios(SEED, FULL)
    parts = []
    for r in reports:
        s = r.statistics
        parts.append(f"{r.name}: max {s['max_ratio']:.2f} mean {s['mean_ratio']:.2f} ceiling {s['min_ceiling']:.0f}")
        assert s["instances"] >= 1
    main = [r for r in reports if r.name.startswith("ratio[gensm-main]")][0]
    assert main.statistics["instances"] >= 50 and main.trials >= 50 * 2000
    quotients = {p for r in reports if "constrained" in r.name for p in r.statistics["rank_quotients"]}
    assert quotients == {1.0, 2.0}
    ok = all(r.passed for r in reports)
    criterion(5, "approximation ceilings", ok, "; ".join(parts))
    assert ok


def test_statistical_lemmas(criterion):
    lemma = suite_sampling_lemma(SEED, FULL)
    feige = suite_feige(SEED, FULL)
    assert len(lemma) >= 5 and all(r.trials >= 10000 for r in lemma)
    assert len(feige) >= 5 and all(r.trials >= 4000 for r in feige)
    ok = all(r.passed for r in lemma + feige)
    low = min(r.statistics["probability"] for r in lemma)
    criterion(6, "sampling lemma and random-half bound", ok, f"min empirical probability {low:.4f}")
    assert ok


def test_submodularity(criterion):
    reports = suite_submodularity(SEED, FULL)
    assert FULL.submod_n == 8
    ok = all(r.passed for r in reports)
    fixture = [r for r in reports if "xos" in r.name][0]
    criterion(7, "submodularity + XOS fixture", ok, f"XOS counterexample {fixture.statistics['counterexample']}")
    assert ok


def test_hard_pair(criterion):
    (r,) = suite_hard_pair(SEED, FULL)
    assert r.trials >= 1000
    criterion(8, "hard XOS pair", r.passed, f"opt ratio {r.statistics['ratio']}, {r.trials} sets outside R")
    assert r.passed and r.statistics["ratio"] == 4.0


def test_verify_all_deterministic(tmp_path, criterion):
    outs = []
    for k in range(2):
        path = tmp_path / f"all{k}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "bfmech.cli", "verify", "all", "--seed", "42", "--out", str(path)],
            capture_output=True,
        )
        assert proc.returncode == 0, proc.stderr.decode()
        outs.append(path.read_bytes())
    same = outs[0] == outs[1]
    criterion(9, "verify all determinism", same, f"{len(outs[0])} bytes")
    assert same
