"""Reference algorithms: modular approximation, greedy, random, brute force."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .constraints import IndependenceSystem, NeighborhoodSpec, SupportSet, swap
from .objectives import SetOracle
from .search import RunReport, Step

BRUTE_FORCE_MAX_N = 20


@dataclass
class ModularProfile:
    """Singleton gains ``f({x}) - f(empty)``; ``value`` is the linear surrogate."""

    singleton_gains: np.ndarray

    def value(self, X) -> float:
        return float(self.singleton_gains[list(X)].sum())


def modular_profile(oracle: SetOracle) -> ModularProfile:
    # f(empty) = 0 by normalisation, so n calls suffice
    gains = np.array([oracle.value((x,)) for x in range(oracle.n)])
    return ModularProfile(gains)


def maximize_modular(
    profile: ModularProfile, sys: IndependenceSystem, q: int = 1, max_rounds: int = 10_000
) -> SupportSet:
    """Maximise the linear surrogate over ``sys``.

    Weight-greedy is exact on a matroid. On a p-system the greedy set is
    improved by best-improvement q-reachable local search on the surrogate.
    """
    gains = profile.singleton_gains
    order = sorted(range(sys.n), key=lambda e: (-gains[e], e))
    X = sys.extend_to_maximal((), order)
    if sys.is_matroid:
        return X
    spec = NeighborhoodSpec.for_system(sys, q)
    for _ in range(max_rounds):
        base = profile.value(X)
        best, best_val = None, base
        for drop, add in sys.reachable_moves(X, spec):
            v = base + gains[list(add)].sum() - gains[list(drop)].sum()
            if v > best_val + 1e-15:
                best, best_val = (drop, add), v
        if best is None:
            break
        X = swap(X, *best)
    return X


def modular_approximation(oracle: SetOracle, sys: IndependenceSystem, q: int = 1) -> RunReport:
    t0 = time.perf_counter()
    f0, g0 = oracle.f_calls, oracle.grad_calls
    profile = modular_profile(oracle)
    X = maximize_modular(profile, sys, q)
    value = oracle.value(X)
    return RunReport(
        algorithm="modular",
        variant=None,
        final_set=X,
        final_value=value,
        iterations_used=0,
        stop_reason="done",
        f_calls=oracle.f_calls - f0,
        grad_calls=oracle.grad_calls - g0,
        wall_time=time.perf_counter() - t0,
        params={"q": q, "p": sys.p, "rank": sys.rank, "surrogate_value": profile.value(X)},
    )


def greedy(oracle: SetOracle, sys: IndependenceSystem) -> RunReport:
    """Add the feasible element with the largest marginal gain until none fits."""
    t0 = time.perf_counter()
    f0, g0 = oracle.f_calls, oracle.grad_calls
    X: SupportSet = ()
    fX = 0.0
    steps = []
    it = 0
    while True:
        it += 1
        before = oracle.f_calls
        best = None
        for e in range(sys.n):
            if e in X:
                continue
            Y = tuple(sorted(X + (e,)))
            if not sys._feasible(Y):
                continue
            v = oracle.value(Y)
            if best is None or v > best[0]:
                best = (v, e, Y)
        if best is None:
            break
        steps.append(Step(it, X, fX, ((), (best[1],)), oracle.f_calls - before, 0))
        fX, X = best[0], best[2]
    return RunReport(
        algorithm="greedy",
        variant=None,
        final_set=X,
        final_value=fX,
        iterations_used=len(steps),
        stop_reason="maximal",
        f_calls=oracle.f_calls - f0,
        grad_calls=oracle.grad_calls - g0,
        scans=it,
        wall_time=time.perf_counter() - t0,
        trajectory=steps,
    )


def random_selection(sys: IndependenceSystem, seed: int) -> SupportSet:
    """A maximal feasible set built from a seeded random element order."""
    order = np.random.default_rng(seed).permutation(sys.n)
    return sys.extend_to_maximal((), order)


def random_baseline(oracle: SetOracle, sys: IndependenceSystem, seed: int) -> RunReport:
    t0 = time.perf_counter()
    f0 = oracle.f_calls
    X = random_selection(sys, seed)
    return RunReport(
        algorithm="random",
        variant=None,
        final_set=X,
        final_value=oracle.value(X),
        iterations_used=0,
        stop_reason="done",
        f_calls=oracle.f_calls - f0,
        wall_time=time.perf_counter() - t0,
        params={"seed": seed},
    )


def maximal_sets(sys: IndependenceSystem):
    """Yield the maximal feasible sets (inclusion-wise)."""
    return sys.maximal_sets()


def brute_force_opt(
    oracle: SetOracle, sys: IndependenceSystem, *, maximal_only: bool = True
) -> tuple[SupportSet, float]:
    """Exact maximiser of ``f`` over the feasible sets.

    ``f`` is monotone, so by default only maximal feasible sets are
    evaluated. Ties go to the first set enumerated.
    """
    if sys.n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force refuses n={sys.n} > {BRUTE_FORCE_MAX_N}")
    sets = maximal_sets(sys) if maximal_only else sys.feasible_sets()
    best, best_val = (), -np.inf
    for X in sets:
        v = oracle.value(X)
        if v > best_val:
            best, best_val = X, v
    return best, float(best_val)
