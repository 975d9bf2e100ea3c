"""Local search for sparse set-function maximisation.

Three drivers share one move-selection vocabulary:

* :func:`matroid_local_search` - single swaps under a matroid;
* :func:`system_local_search` - q-reachable exchanges under a p-matroid
  intersection or a p-exchange system;
* :func:`geometric_local_search` - first swap that improves by a factor
  ``1 + eps/n`` under a matroid.

Each comes in three variants. *Oblivious* evaluates ``f`` on every
neighbour; *semi-oblivious* evaluates one neighbour per add-set, dropping
the elements with the smallest weight in ``w^(X)``; *non-oblivious* replaces
``f`` by the score

    ||grad u(w^(X))_add||^2 / (2M) - (M/2) ||w^(X)_drop||^2,

which needs one maximiser and one gradient per iteration.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .constraints import (
    ConfigurationError,
    IndependenceSystem,
    NeighborhoodSpec,
    SupportSet,
    swap,
)
from .objectives import RestrictedConstants, SetOracle

VARIANTS = ("oblivious", "semi-oblivious", "non-oblivious")
ZERO_GAIN = 1e-12


@dataclass
class RunConfig:
    variant: str = "oblivious"
    T: int = 1000
    q: int = 1
    epsilon: float | None = None
    seed: int | None = None
    record_trajectory: bool = True
    init: str = "maximal"
    M: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r}")
        if self.T < 1:
            raise ConfigurationError("T must be at least 1")
        if self.q < 1:
            raise ConfigurationError("q must be at least 1")
        if self.epsilon is not None and not (0.0 < self.epsilon < 1.0):
            raise ConfigurationError("epsilon must lie in (0, 1)")
        if self.init not in ("maximal", "empty"):
            raise ConfigurationError("init must be 'maximal' or 'empty'")
        if self.M is not None and self.M <= 0:
            raise ConfigurationError("M must be positive")


@dataclass
class Step:
    """One scan of the neighbourhood.

    ``members``/``value`` describe the solution the scan started from; the
    call counts are those spent during this scan only.
    """

    iteration: int
    members: SupportSet
    value: float
    move: tuple[SupportSet, SupportSet] | None
    f_calls: int
    grad_calls: int

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "set": list(self.members),
            "value": self.value,
            "move": None if self.move is None else {"drop": list(self.move[0]), "add": list(self.move[1])},
            "f_calls": self.f_calls,
            "grad_calls": self.grad_calls,
        }


@dataclass
class RunReport:
    algorithm: str
    variant: str | None
    final_set: SupportSet
    final_value: float
    iterations_used: int
    stop_reason: str
    f_calls: int = 0
    grad_calls: int = 0
    scans: int = 0
    wall_time: float = 0.0
    trajectory: list[Step] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def to_dict(self, with_trajectory: bool = True) -> dict:
        d = {
            "algorithm": self.algorithm,
            "variant": self.variant,
            "final_set": list(self.final_set),
            "final_value": self.final_value,
            "iterations_used": self.iterations_used,
            "stop_reason": self.stop_reason,
            "f_calls": self.f_calls,
            "grad_calls": self.grad_calls,
            "scans": self.scans,
            "params": self.params,
        }
        if with_trajectory:
            d["trajectory"] = [s.to_dict() for s in self.trajectory]
        return d


def exchange_size(sys: IndependenceSystem, q: int) -> int:
    """Exchange size t whose smoothness constant governs a p-system search."""
    if sys.family == "intersection":
        return 2 * sys.p * (q + 1)
    if sys.family == "exchange":
        return sys.p * q + 1
    return 2


def non_oblivious_score(
    w: np.ndarray, grad: np.ndarray, drop: Iterable[int], add: Iterable[int], M: float
) -> float:
    """Surrogate gain of moving ``drop -> add`` from the solution with maximiser ``w``.

    ``w`` and ``grad`` are ``w^(X)`` and ``grad u(w^(X))``, computed once per
    iteration by the caller.
    """
    if M <= 0:
        raise ConfigurationError("M must be positive")
    a = list(add)
    d = list(drop)
    return float(grad[a] @ grad[a]) / (2.0 * M) - 0.5 * M * float(w[d] @ w[d])


def semi_oblivious_drop(
    sys: IndependenceSystem,
    X: SupportSet,
    w: np.ndarray,
    add: Sequence[int],
    spec: NeighborhoodSpec | None = None,
) -> SupportSet | None:
    """Cheapest drop set that makes ``X - drop + add`` feasible.

    Under a matroid the drop is a single element minimising ``w_x^2``;
    otherwise any subset of X within ``spec.drop_cap`` such that the result
    is q-reachable, minimising ``||w_drop||^2``. Ties go to the
    lexicographically smallest set. Returns None when no drop works.
    """
    add = tuple(add)
    if sys.is_matroid:
        best, best_w = None, math.inf
        for x in X:
            if sys._feasible(swap(X, (x,), add)):
                wx = float(w[x] ** 2)
                if wx < best_w:
                    best, best_w = (x,), wx
        return best
    if spec is None:
        raise ConfigurationError("p-systems need a NeighborhoodSpec")
    if len(add) > spec.add_cap:
        return None
    best, best_w = None, math.inf
    for d in range(min(spec.drop_cap, len(X)) + 1):
        if d == 0 and not add:
            continue
        for drop in itertools.combinations(X, d):
            wx = float(np.sum(w[list(drop)] ** 2))
            if wx < best_w and sys._feasible(swap(X, drop, add)):
                best, best_w = drop, wx
    return best


class _Run:
    """Bookkeeping shared by the drivers: counters, trajectory, timing."""

    def __init__(self, oracle: SetOracle, sys: IndependenceSystem, cfg: RunConfig):
        self.oracle = oracle
        self.sys = sys
        self.cfg = cfg
        self.f0 = oracle.f_calls
        self.g0 = oracle.grad_calls
        self.t0 = time.perf_counter()
        self.steps: list[Step] = []
        self.moves = 0
        self.scans = 0

    def mark(self):
        return self.oracle.f_calls, self.oracle.grad_calls

    def record(self, it, X, value, move, before):
        if not self.sys._feasible(X):
            raise AssertionError(f"infeasible solution {X} at iteration {it}")
        self.scans += 1
        if self.cfg.record_trajectory:
            f0, g0 = before
            self.steps.append(
                Step(it, X, value, move, self.oracle.f_calls - f0, self.oracle.grad_calls - g0)
            )

    def report(self, algorithm, X, value, reason, params) -> RunReport:
        if not self.sys._feasible(X):
            raise AssertionError(f"infeasible final solution {X}")
        return RunReport(
            algorithm=algorithm,
            variant=self.cfg.variant,
            final_set=X,
            final_value=float(value),
            iterations_used=self.moves,
            stop_reason=reason,
            f_calls=self.oracle.f_calls - self.f0,
            grad_calls=self.oracle.grad_calls - self.g0,
            scans=self.scans,
            wall_time=time.perf_counter() - self.t0,
            trajectory=self.steps,
            params=params,
        )


def _initial(sys: IndependenceSystem, cfg: RunConfig) -> SupportSet:
    if cfg.init == "empty":
        return ()
    order = None
    if cfg.seed is not None:
        order = np.random.default_rng(cfg.seed).permutation(sys.n)
    return sys.extend_to_maximal((), order)


def _resolve_M(cfg, constants, s, t) -> float:
    if cfg.M is not None:
        return cfg.M
    if constants is None:
        raise ConfigurationError("the non-oblivious variant needs restricted constants")
    try:
        return constants.M(s, t)
    except KeyError as exc:
        raise ConfigurationError(f"missing smoothness constant M_{{{s},{t}}}") from exc


def _best(candidates):
    """Argmax with ties to the earliest candidate."""
    best = None
    for key, payload in candidates:
        if best is None or key > best[0]:
            best = (key, payload)
    return best


def matroid_local_search(
    oracle: SetOracle,
    sys: IndependenceSystem,
    cfg: RunConfig,
    constants: RestrictedConstants | None = None,
) -> RunReport:
    """Anytime swap local search under a single matroid.

    Starts from a maximal set and performs at most ``cfg.T`` improving swaps,
    each the best one under the variant's rule; stops early at a local
    optimum.
    """
    if not sys.is_matroid:
        raise ConfigurationError("matroid_local_search needs a single matroid")
    s = sys.rank
    M = _resolve_M(cfg, constants, s, 2) if cfg.variant == "non-oblivious" else None
    run = _Run(oracle, sys, cfg)
    X = _initial(sys, cfg)
    w = fX = None
    if cfg.variant != "non-oblivious":
        w, fX = oracle.restricted_maximizer(X)

    reason = "budget"
    for it in range(1, cfg.T + 1):
        before = run.mark()
        if cfg.variant == "oblivious":
            best = _best(_oblivious_swaps(oracle, sys, X))
            ok = best is not None and best[0] - fX > 0
        elif cfg.variant == "semi-oblivious":
            best = _best(_semi_swaps(oracle, sys, X, w))
            ok = best is not None and best[0] - fX > 0
        else:
            w, fX = oracle.restricted_maximizer(X)
            g = oracle.gradient(w)
            best = _best(
                (non_oblivious_score(w, g, (x,), (xp,), M), ((x,), (xp,), None, None))
                for x, xp in sys.swap_neighborhood(X)
            )
            ok = best is not None and best[0] > 0
        if not ok:
            run.record(it, X, fX, None, before)
            reason = "local-optimum"
            break
        drop, add, w_new, f_new = best[1]
        run.record(it, X, fX, (drop, add), before)
        X = swap(X, drop, add)
        w, fX = w_new, f_new
        run.moves += 1

    if fX is None:
        w, fX = oracle.restricted_maximizer(X)
    params = {"T": cfg.T, "rank": s, "p": 1, "M": M, "init": cfg.init}
    return run.report("matroid-local-search", X, fX, reason, params)


def _oblivious_swaps(oracle, sys, X):
    for x, xp in sys.swap_neighborhood(X):
        w, v = oracle.restricted_maximizer(swap(X, (x,), (xp,)))
        yield v, ((x,), (xp,), w, v)


def _semi_swaps(oracle, sys, X, w):
    inside = set(X)
    for xp in range(sys.n):
        if xp in inside:
            continue
        drop = semi_oblivious_drop(sys, X, w, (xp,))
        if drop is None:
            continue
        wn, v = oracle.restricted_maximizer(swap(X, drop, (xp,)))
        yield v, (drop, (xp,), wn, v)


def system_local_search(
    oracle: SetOracle,
    sys: IndependenceSystem,
    cfg: RunConfig,
    constants: RestrictedConstants | None = None,
    *,
    override: bool = False,
) -> RunReport:
    """Anytime q-reachable local search under a p-matroid intersection or
    p-exchange system (p >= 2)."""
    if sys.is_matroid or sys.p < 2:
        raise ConfigurationError("system_local_search needs a p >= 2 system")
    spec = NeighborhoodSpec.for_system(sys, cfg.q)
    s = sys.rank
    t = exchange_size(sys, cfg.q)
    M = _resolve_M(cfg, constants, s, t) if cfg.variant == "non-oblivious" else None
    run = _Run(oracle, sys, cfg)
    X = _initial(sys, cfg)
    w = fX = None
    if cfg.variant != "non-oblivious":
        w, fX = oracle.restricted_maximizer(X)

    reason = "budget"
    for it in range(1, cfg.T + 1):
        before = run.mark()
        moves = sys.reachable_moves(X, spec, override=override)
        if cfg.variant == "oblivious":
            best = _best(_evaluate_moves(oracle, X, moves))
            ok = best is not None and best[0] - fX > 0
        elif cfg.variant == "semi-oblivious":
            best = _best(_semi_moves(oracle, sys, X, w, spec, moves))
            ok = best is not None and best[0] - fX > 0
        else:
            w, fX = oracle.restricted_maximizer(X)
            g = oracle.gradient(w)
            best = _best(
                (non_oblivious_score(w, g, drop, add, M), (drop, add, None, None))
                for drop, add in moves
            )
            ok = best is not None and best[0] > 0
        if not ok:
            run.record(it, X, fX, None, before)
            reason = "local-optimum"
            break
        drop, add, w_new, f_new = best[1]
        run.record(it, X, fX, (drop, add), before)
        X = swap(X, drop, add)
        w, fX = w_new, f_new
        run.moves += 1

    if fX is None:
        w, fX = oracle.restricted_maximizer(X)
    params = {
        "T": cfg.T,
        "q": cfg.q,
        "p": sys.p,
        "t": t,
        "rank": s,
        "family": sys.family,
        "M": M,
        "init": cfg.init,
    }
    return run.report("system-local-search", X, fX, reason, params)


def _evaluate_moves(oracle, X, moves):
    for drop, add in moves:
        w, v = oracle.restricted_maximizer(swap(X, drop, add))
        yield v, (drop, add, w, v)


def _semi_moves(oracle, sys, X, w, spec, moves):
    # one candidate per distinct non-empty add-set
    seen = set()
    for _, add in moves:
        if not add or add in seen:
            continue
        seen.add(add)
        drop = semi_oblivious_drop(sys, X, w, add, spec)
        if drop is None:
            continue
        wn, v = oracle.restricted_maximizer(swap(X, drop, add))
        yield v, (drop, add, wn, v)


def geometric_local_search(
    oracle: SetOracle,
    sys: IndependenceSystem,
    cfg: RunConfig,
    constants: RestrictedConstants | None = None,
) -> RunReport:
    """Swap search that accepts the first move improving by a factor 1 + eps/n.

    Starts from the best feasible singleton extended to a maximal set. The
    loop also stops after ``cfg.T`` moves as a safety net.
    """
    if not sys.is_matroid:
        raise ConfigurationError("geometric_local_search needs a single matroid")
    if cfg.epsilon is None:
        raise ConfigurationError("geometric_local_search needs epsilon")
    n = sys.n
    delta = cfg.epsilon / n
    s = sys.rank
    M = _resolve_M(cfg, constants, s, 2) if cfg.variant == "non-oblivious" else None
    run = _Run(oracle, sys, cfg)

    best_single, best_val = None, -math.inf
    for v in range(n):
        if sys._feasible((v,)):
            val = oracle.value((v,))
            if val > best_val:
                best_single, best_val = v, val
    start = () if best_single is None else (best_single,)
    X = sys.extend_to_maximal(start)
    w, fX = oracle.restricted_maximizer(X)

    reason = "budget"
    for it in range(1, cfg.T + 1):
        before = run.mark()
        hit = None
        if cfg.variant == "non-oblivious":
            if it > 1:
                w, fX = oracle.restricted_maximizer(X)
            g = oracle.gradient(w)
            for x, xp in sys.swap_neighborhood(X):
                sc = non_oblivious_score(w, g, (x,), (xp,), M)
                if sc >= delta * fX and sc > ZERO_GAIN:
                    hit = ((x,), (xp,), None, None)
                    break
        else:
            if cfg.variant == "oblivious":
                cands = _oblivious_swaps(oracle, sys, X)
            else:
                cands = _semi_swaps(oracle, sys, X, w)
            for v, payload in cands:
                if v >= (1.0 + delta) * fX and v - fX > ZERO_GAIN:
                    hit = payload
                    break
        if hit is None:
            run.record(it, X, fX, None, before)
            reason = "local-optimum"
            break
        drop, add, w_new, f_new = hit
        run.record(it, X, fX, (drop, add), before)
        X = swap(X, drop, add)
        w, fX = w_new, f_new
        run.moves += 1

    if fX is None:
        w, fX = oracle.restricted_maximizer(X)
    params = {"epsilon": cfg.epsilon, "delta": delta, "rank": s, "p": 1, "M": M, "T": cfg.T}
    return run.report("geometric-local-search", X, fX, reason, params)


def local_search(
    oracle: SetOracle,
    sys: IndependenceSystem,
    cfg: RunConfig,
    constants: RestrictedConstants | None = None,
) -> RunReport:
    """Dispatch to the matroid or p-system driver."""
    if sys.is_matroid:
        return matroid_local_search(oracle, sys, cfg, constants)
    return system_local_search(oracle, sys, cfg, constants)
