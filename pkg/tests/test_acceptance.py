"""The ten acceptance criteria, each at its stated tolerance and time limit.

Every test records a PASS/FAIL line that the terminal summary prints.
"""

import itertools
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from localsearch.baselines import brute_force_opt, maximize_modular, modular_approximation, modular_profile
from localsearch.certify import (
    certify_run,
    check_lemma_inequalities,
    check_localizability_general,
    check_localizability_simplified,
)
from localsearch.constraints import NeighborhoodSpec, UniformMatroid
from localsearch.corpus import build_corpus, orthogonal_instance
from localsearch.datasets import gen_regression
from localsearch.experiments import desk_spec, run_experiment
from localsearch.objectives import SetOracle, compute_restricted_constants
from localsearch.search import RunConfig, geometric_local_search, local_search

from conftest import record_acceptance

TOL = 1e-7
SEEDS = (None, 0, 1, 2)


@pytest.fixture(scope="module")
def corpus():
    insts = build_corpus()
    for inst in insts:
        inst.constants()
    return insts


@pytest.fixture(scope="module")
def opts(corpus):
    return {inst.name: brute_force_opt(inst.oracle(), inst.system)[1] for inst in corpus}


def brute_swaps(sys_, X):
    out = []
    for x in X:
        for xp in range(sys_.n):
            if xp not in X and sys_.is_independent(tuple(sorted(set(X) - {x} | {xp}))):
                out.append((x, xp))
    return out


def brute_reachable(sys_, X, spec):
    out = set()
    for k in range(sys_.n + 1):
        for Y in itertools.combinations(range(sys_.n), k):
            if Y != X and sys_.is_independent(Y) and len(set(Y) - set(X)) <= spec.add_cap \
                    and len(set(X) - set(Y)) <= spec.drop_cap:
                out.add(Y)
    return out


def test_criterion_01_neighbourhood_oracles(corpus):
    t0 = time.perf_counter()
    mismatches, checked = [], 0
    assert len(corpus) >= 30
    kinds = {type(i.system).__name__ for i in corpus}
    for inst in corpus:
        S = inst.system
        assert inst.n <= 8
        for X in S.feasible_sets():
            if S.is_matroid:
                checked += 1
                if list(S.swap_neighborhood(X)) != brute_swaps(S, X):
                    mismatches.append((inst.name, X))
            else:
                for q in (1, 2):
                    spec = NeighborhoodSpec.for_system(S, q)
                    checked += 1
                    got = list(S.q_reachable_neighborhood(X, spec))
                    if len(got) != len(set(got)) or set(got) != brute_reachable(S, X, spec):
                        mismatches.append((inst.name, X, q))
    dt = time.perf_counter() - t0
    ok = not mismatches and dt < 10 and len(kinds) == 4
    record_acceptance(1, ok, f"{len(corpus)} instances, {checked} neighbourhoods, "
                             f"{len(mismatches)} mismatches, {dt:.1f}s")
    assert ok, mismatches[:5]


def test_criterion_02_lemmas(corpus):
    t0 = time.perf_counter()
    worst = np.inf
    bad = []
    for inst in corpus:
        rep = check_lemma_inequalities(inst.oracle(), inst.constants(), inst.system, tol=TOL)
        worst = min(worst, rep.smoothness_slack, rep.concavity_slack, rep.singleton_slack)
        if not rep.passed:
            bad.append(inst.name)
    dt = time.perf_counter() - t0
    ok = not bad and dt < 30
    record_acceptance(2, ok, f"worst slack {worst:.2e}, {len(bad)} failures, {dt:.1f}s")
    assert ok, bad


def test_criterion_03_localizability(corpus):
    t0 = time.perf_counter()
    bad, worst = [], np.inf
    for inst in corpus:
        c = inst.constants()
        s = inst.system.rank
        a = c.m(2 * s) / c.M(s, 2)
        rep = check_localizability_simplified(inst.oracle(), s, a, 1 / a, tol=TOL)
        worst = min(worst, rep.worst_slack)
        if not rep.passed:
            bad.append(inst.name)
    lin = orthogonal_instance(5)
    lin_rep = check_localizability_general(lin.oracle(), 3, 3, 1.0, 1.0, 0.0, tol=TOL)
    dt = time.perf_counter() - t0
    ok = not bad and lin_rep.passed and dt < 60
    record_acceptance(3, ok, f"simplified worst slack {worst:.2e}, {len(bad)} failures; "
                             f"linear (1,1,0) {'pass' if lin_rep.passed else 'fail'}; {dt:.1f}s")
    assert ok, bad


def _certify(inst, rep, opts):
    return certify_run(rep, inst.oracle(), inst.system, inst.constants(), opt_value=opts[inst.name], tol=TOL)


def test_criterion_04_local_optimum_certificates(corpus, opts):
    t0 = time.perf_counter()
    runs, bad = 0, []
    for inst in corpus:
        qs = (1,) if inst.system.is_matroid else (1, 2)
        for variant, q, seed in itertools.product(("oblivious", "semi-oblivious", "non-oblivious"), qs, SEEDS):
            rep = local_search(inst.oracle(), inst.system, RunConfig(variant=variant, q=q, seed=seed),
                               inst.constants())
            assert rep.stop_reason == "local-optimum"
            cert = _certify(inst, rep, opts)
            runs += 1
            if cert["status"] != "pass":
                bad.append((inst.name, variant, q, seed, cert))
    dt = time.perf_counter() - t0
    ok = not bad
    record_acceptance(4, ok, f"{runs} local-optimum runs, {len(bad)} failures, {dt:.1f}s")
    assert ok, bad[:3]


def test_criterion_05_budget_certificates(corpus, opts):
    t0 = time.perf_counter()
    budget, bad = 0, []
    for inst in corpus:
        qs = (1,) if inst.system.is_matroid else (1, 2)
        for variant, q, seed, T in itertools.product(("oblivious", "non-oblivious"), qs, SEEDS, (1, 2)):
            rep = local_search(inst.oracle(), inst.system,
                               RunConfig(variant=variant, q=q, seed=seed, T=T), inst.constants())
            if rep.stop_reason != "budget":
                continue
            budget += 1
            cert = _certify(inst, rep, opts)
            if cert["status"] != "pass" or not cert["theorem"].endswith("budget"):
                bad.append((inst.name, variant, q, seed, T, cert))
    dt = time.perf_counter() - t0
    ok = not bad and budget > 0
    record_acceptance(5, ok, f"{budget} budget-stopped runs, {len(bad)} failures, {dt:.1f}s")
    assert ok, bad[:3]


def test_criterion_06_geometric(corpus, opts):
    t0 = time.perf_counter()
    runs, bad = 0, []
    for inst in corpus:
        if not inst.system.is_matroid:
            continue
        for eps in (0.05, 0.1, 0.3):
            rep = geometric_local_search(inst.oracle(), inst.system, RunConfig(epsilon=eps), inst.constants())
            cert = _certify(inst, rep, opts)
            runs += 1
            if cert["status"] != "pass" or not cert["iterations_within_cap"]:
                bad.append((inst.name, eps, cert))
    dt = time.perf_counter() - t0
    ok = not bad and runs > 0
    record_acceptance(6, ok, f"{runs} geometric runs, {len(bad)} failures, {dt:.1f}s")
    assert ok, bad[:3]


def test_criterion_07_modular(corpus, opts):
    t0 = time.perf_counter()
    runs, bad, surrogate_bad = 0, [], []
    for inst in corpus:
        for q in ((1,) if inst.system.is_matroid else (1, 2)):
            rep = modular_approximation(inst.oracle(), inst.system, q=q)
            cert = _certify(inst, rep, opts)
            runs += 1
            if cert["status"] != "pass":
                bad.append((inst.name, q, cert))
        if inst.system.is_matroid:
            prof = modular_profile(inst.oracle())
            X = maximize_modular(prof, inst.system)
            best = max(prof.value(Y) for Y in inst.system.feasible_sets())
            if abs(prof.value(X) - best) > TOL:
                surrogate_bad.append(inst.name)
    dt = time.perf_counter() - t0
    ok = not bad and not surrogate_bad
    record_acceptance(7, ok, f"{runs} modular runs, {len(bad)} bound failures, "
                             f"{len(surrogate_bad)} surrogate mismatches, {dt:.1f}s")
    assert ok, (bad[:3], surrogate_bad)


def test_criterion_08_call_counts():
    ds = gen_regression(50, 20, 4, 2, 0.2, seed=0)
    sys_ = UniformMatroid(20, 5)
    c = compute_restricted_constants(ds.objective(), 5, (2,), sizes={1, 2, 5, 10})
    expect = {"oblivious": (5 * 15, 0), "semi-oblivious": (15, 0), "non-oblivious": (1, 1)}
    seen, ok = {}, True
    for variant, per_step in expect.items():
        rep = local_search(SetOracle(ds.objective()), sys_, RunConfig(variant=variant, seed=3), c)
        counts = {(s.f_calls, s.grad_calls) for s in rep.trajectory}
        seen[variant] = sorted(counts)
        ok = ok and counts == {per_step} and rep.iterations_used > 0
    record_acceptance(8, ok, "per-scan (f, grad) calls " + ", ".join(f"{k}={v}" for k, v in seen.items()))
    assert ok, seen


def _trend(kind, trials=10):
    spec = desk_spec(kind, trials=trials, timing=False, opt=False)
    res = run_experiment(spec)
    top = spec.sweep_values[-1]
    by = {}
    for r in res.rows:
        if r.sweep_value == top:
            by.setdefault(r.trial, {})[r.algorithm] = r.final_value
    ge = sum(v["non-oblivious"] >= v["modular"] - 1e-12 for v in by.values())
    close = sum(abs(v["non-oblivious"] - v["oblivious"]) <= 0.05 * abs(v["oblivious"]) for v in by.values())
    return ge, close, len(by)


def test_criterion_09_trends():
    t0 = time.perf_counter()
    out = {k: _trend(k) for k in ("regression", "ising")}
    dt = time.perf_counter() - t0
    ok = all(ge >= 8 and close >= 8 and n == 10 for ge, close, n in out.values())
    detail = "; ".join(f"{k}: non>=modular {ge}/{n}, non~obl {close}/{n}" for k, (ge, close, n) in out.items())
    record_acceptance(9, ok, f"{detail}; {dt:.1f}s")
    assert ok, out


def test_criterion_10_determinism(tmp_path):
    outputs = []
    for rep in range(2):
        files = {}
        for kind in ("regression", "ising"):
            spec = desk_spec(kind, trials=2)
            d = {
                "schema_version": 1,
                "dataset": spec.dataset,
                "algorithms": [a.__dict__ for a in spec.algorithms],
                "sweep": {"values": spec.sweep_values},
                "trials": spec.trials,
                "seed": spec.seed,
                "opt": spec.opt,
            }
            path = tmp_path / f"{kind}.json"
            path.write_text(json.dumps(d))
            out = tmp_path / f"out{rep}-{kind}"
            proc = subprocess.run([sys.executable, "-m", "localsearch.cli", "run", "--spec", str(path),
                                   "--out", str(out), "--threads", "1", "--no-timing"],
                                  capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            files[kind] = ((out / "results.csv").read_bytes(), (out / "certs.json").read_bytes())
        outputs.append(files)
    ok = outputs[0] == outputs[1]
    record_acceptance(10, ok, "two single-threaded CLI runs byte-identical" if ok else "outputs differ")
    assert ok
