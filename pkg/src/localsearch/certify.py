"""Empirical checks of localizability, the smoothness/concavity inequalities
and the approximation guarantees of finished runs.

Everything here is brute force and meant for ground sets of at most eight
or so elements.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import brute_force_opt
from .constraints import IndependenceSystem, SupportSet
from .objectives import RestrictedConstants, SetOracle
from .search import RunReport, exchange_size

TOL = 1e-7
MAX_BIJECTION_DIFF = 6


@dataclass
class LocalizabilityReport:
    alpha: float
    beta1: float
    beta2: float
    s: int
    t: int
    worst_slack: float = math.inf
    witness: dict | None = None
    checked: int = 0
    partial: bool = False
    tol: float = TOL

    @property
    def passed(self) -> bool:
        return self.worst_slack >= -self.tol

    def _update(self, slack: float, witness) -> None:
        self.checked += 1
        if slack < self.worst_slack:
            self.worst_slack = float(slack)
            self.witness = witness

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "s": self.s,
            "t": self.t,
            "worst_slack": self.worst_slack,
            "witness": self.witness,
            "checked": self.checked,
            "partial": self.partial,
            "passed": self.passed,
        }


class _Values:
    """Memoised f over subsets, keyed by sorted tuple."""

    def __init__(self, oracle: SetOracle):
        self.oracle = oracle
        self.cache: dict[SupportSet, float] = {}

    def __call__(self, X) -> float:
        X = tuple(sorted(X))
        if X not in self.cache:
            self.cache[X] = self.oracle.value(X)
        return self.cache[X]


def check_localizability_simplified(
    oracle: SetOracle,
    s: int,
    alpha: float,
    beta: float,
    n_limit: int = 8,
    tol: float = TOL,
) -> LocalizabilityReport:
    """Check the single-swap localizability inequality with size ``s``.

    For all X, X* of size s and all bijections phi: X \\ X* -> X* \\ X,
    ``sum_x f(X - x + phi(x)) - f(X) >= alpha f(X*) - beta f(X)``.
    Pairs whose difference exceeds six elements are skipped and the report
    is flagged partial.
    """
    n = oracle.n
    if n > n_limit:
        raise ValueError(f"n={n} exceeds n_limit={n_limit}")
    f = _Values(oracle)
    rep = LocalizabilityReport(alpha, beta, 0.0, s, 2, tol=tol)
    subsets = list(itertools.combinations(range(n), s))
    for X in subsets:
        fX = f(X)
        for Xs in subsets:
            out = [x for x in X if x not in Xs]
            new = [x for x in Xs if x not in X]
            if len(out) > MAX_BIJECTION_DIFF:
                rep.partial = True
                continue
            rhs = alpha * f(Xs) - beta * fX
            gains = {
                (x, y): f([e for e in X if e != x] + [y]) - fX for x in out for y in new
            }
            for perm in itertools.permutations(new):
                lhs = sum(gains[x, y] for x, y in zip(out, perm))
                rep._update(lhs - rhs, {"X": list(X), "X*": list(Xs), "phi": dict(zip(out, perm))})
    return rep


def _collections(members):
    """Index tuples of the collections tried by the general check."""
    m = len(members)
    for i in range(m):
        yield (i,)
    for i in range(m):
        for j in range(i, m):
            yield (i, j)


def check_localizability_general(
    oracle: SetOracle,
    s: int,
    t: int,
    alpha: float,
    beta1: float,
    beta2: float,
    n_limit: int = 6,
    tol: float = TOL,
    ell_at_least_k: bool = True,
) -> LocalizabilityReport:
    """Check the multi-exchange localizability inequality on a finite family.

    For all X, X* with at most s elements the tried collections P are
    (a) every multiset of one or two non-empty subsets of X (sym. diff.) X*
    with at most t elements each and (b) when |X| = |X*| and t >= 2, the
    pairs ``{x, phi(x)}`` of every bijection phi. k is the least number of
    times an element of X* \\ X is covered, l the most times an element of
    X \\ X* is; collections leaving an element of X* \\ X uncovered are
    skipped. Passing is evidence, not proof.

    By default l is raised to at least k. Without that, a linear f already
    fails with (1, 1, 0): take X inside X* and P = {{a}, {a}}, so k = 2 and
    l = 1. Set ``ell_at_least_k=False`` for the literal reading.
    """
    n = oracle.n
    if n > n_limit:
        raise ValueError(f"n={n} exceeds n_limit={n_limit}")
    if s > 3 or t > 3:
        raise ValueError("general check supports s <= 3 and t <= 3")
    f = _Values(oracle)
    rep = LocalizabilityReport(alpha, beta1, beta2, s, t, tol=tol)
    subsets = [c for k in range(s + 1) for c in itertools.combinations(range(n), k)]
    for X in subsets:
        fX = f(X)
        Xset = set(X)
        for Xs in subsets:
            fS = f(Xs)
            new = [e for e in Xs if e not in Xset]
            out = [e for e in X if e not in set(Xs)]
            D = sorted(new + out)
            members = [c for k in range(1, min(t, len(D)) + 1) for c in itertools.combinations(D, k)]
            if not members:
                continue
            gains = np.array([f(sorted(Xset.symmetric_difference(P))) - fX for P in members])
            A = np.array([[e in P for e in new] for P in members], dtype=int).reshape(len(members), len(new))
            B = np.array([[e in P for e in out] for P in members], dtype=int).reshape(len(members), len(out))
            colls = list(_collections(members))
            if len(X) == len(Xs) and t >= 2 and 0 < len(out) <= MAX_BIJECTION_DIFF:
                index = {P: i for i, P in enumerate(members)}
                for perm in itertools.permutations(new):
                    colls.append(tuple(index[tuple(sorted((x, y)))] for x, y in zip(out, perm)))
            for c in colls:
                idx = list(c)
                k_cov = A[idx].sum(axis=0)
                if new and k_cov.min() == 0:
                    continue
                k = int(k_cov.min()) if new else 1
                ell = max(1, int(B[idx].sum(axis=0).max())) if out else 1
                if ell_at_least_k:
                    ell = max(ell, k)
                lhs = float(gains[idx].sum())
                rhs = alpha * k * fS - (beta1 * ell + beta2 * k) * fX
                rep._update(
                    lhs - rhs,
                    {"X": list(X), "X*": list(Xs), "P": [list(members[i]) for i in idx], "k": k, "l": ell},
                )
    return rep


@dataclass
class LemmaReport:
    smoothness_slack: float = math.inf
    concavity_slack: float = math.inf
    singleton_slack: float = math.inf
    witnesses: dict = field(default_factory=dict)
    pairs: int = 0
    tol: float = TOL

    @property
    def passed(self) -> bool:
        return min(self.smoothness_slack, self.concavity_slack, self.singleton_slack) >= -self.tol

    def to_dict(self) -> dict:
        return {
            "smoothness_slack": self.smoothness_slack,
            "concavity_slack": self.concavity_slack,
            "singleton_slack": self.singleton_slack,
            "witnesses": self.witnesses,
            "pairs": self.pairs,
            "passed": self.passed,
        }


def check_lemma_inequalities(
    oracle: SetOracle,
    constants: RestrictedConstants,
    sys: IndependenceSystem | None = None,
    n_limit: int = 8,
    tol: float = TOL,
) -> LemmaReport:
    """Verify three inequalities over every pair of subsets.

    * smoothness lower bound: with s = max(|X|, |X'|), t = |X (sym.diff.) X'|,
      ``f(X') - f(X) >= ||g_{X' \\ X}||^2 / (2 M_{s,t}) - M_{s,t}/2 ||w_{X \\ X'}||^2``;
    * concavity upper bound: with s = max(|X|, |X*|),
      ``f(X*) - f(X) <= ||g_{X* \\ X}||^2 / (2 m_{2s}) - m_{2s}/2 ||w_{X \\ X*}||^2``;
    * best singleton: ``f({x*}) >= m_s / (s M_1) f(X)`` for every feasible X,
      s being the rank (needs ``sys``).

    Here ``w = w^(X)`` and ``g = grad u(w^(X))``. Pairs where m is zero make
    the concavity bound vacuous and are skipped.
    """
    n = oracle.n
    if n > n_limit:
        raise ValueError(f"n={n} exceeds n_limit={n_limit}")
    full = 1 << n
    bits = ((np.arange(full)[:, None] >> np.arange(n)) & 1).astype(float)
    size = bits.sum(axis=1).astype(int)
    W = np.zeros((full, n))
    F = np.zeros(full)
    G = np.zeros((full, n))
    for mask in range(full):
        X = tuple(np.flatnonzero(bits[mask]))
        w, v = oracle.restricted_maximizer(X)
        W[mask], F[mask] = w, v
        G[mask] = oracle.gradient(w)

    Mtab = np.full((n + 1, n + 1), np.nan)
    mtab = np.full(n + 1, np.nan)
    for s_ in range(1, n + 1):
        try:
            mtab[s_] = constants.m(2 * s_)
        except KeyError:
            pass
        for t_ in range(1, n + 1):
            try:
                Mtab[s_, t_] = constants.M(s_, t_)
            except KeyError:
                pass

    rep = LemmaReport(tol=tol)
    for i in range(full):
        g2 = G[i] ** 2
        w2 = W[i] ** 2
        inside = bits[i]
        add_norm = (bits * (1 - inside)) @ g2
        drop_norm = ((1 - bits) * inside) @ w2
        s_arr = np.maximum(size, size[i])
        t_arr = size + size[i] - 2 * (bits @ inside).astype(int)
        gain = F - F[i]
        moved = t_arr > 0
        M = Mtab[s_arr, t_arr.clip(min=1)]
        if np.any(moved & np.isnan(M)):
            raise KeyError("missing smoothness constants for the lemma check")
        lower = np.where(moved, add_norm / (2 * np.where(moved, M, 1.0)) - 0.5 * np.where(moved, M, 0.0) * drop_norm, 0.0)
        smooth = gain - lower
        m = mtab[s_arr.clip(min=1)]
        usable = moved & (m > 0)
        safe_m = np.where(usable, m, 1.0)
        upper = add_norm / (2 * safe_m) - 0.5 * safe_m * drop_norm
        concave = np.where(usable, upper - gain, np.inf)
        rep.pairs += full
        j = int(np.argmin(smooth))
        if smooth[j] < rep.smoothness_slack:
            rep.smoothness_slack = float(smooth[j])
            rep.witnesses["smoothness"] = {"X": _members(bits[i]), "X'": _members(bits[j])}
        j = int(np.argmin(concave))
        if concave[j] < rep.concavity_slack:
            rep.concavity_slack = float(concave[j])
            rep.witnesses["concavity"] = {"X": _members(bits[i]), "X*": _members(bits[j])}

    if sys is not None:
        s = sys.rank
        singles = [F[1 << v] for v in range(n) if sys._feasible((v,))]
        best = max(singles) if singles else 0.0
        try:
            ratio = constants.m(s) / (s * constants.M(1, 1))
        except KeyError:
            ratio = None
        if ratio is not None:
            for X in sys.feasible_sets():
                mask = sum(1 << e for e in X)
                slack = best - ratio * F[mask]
                if slack < rep.singleton_slack:
                    rep.singleton_slack = float(slack)
                    rep.witnesses["singleton"] = {"X": list(X)}
    return rep


def _members(row) -> list[int]:
    return [int(e) for e in np.flatnonzero(row)]


# run certificates ----------------------------------------------------------


def guarantee(
    report: RunReport, sys: IndependenceSystem, constants: RestrictedConstants
) -> dict:
    """The approximation bound (and iteration cap) that applies to ``report``."""
    s = sys.rank
    p = sys.p
    params = report.params
    algo = report.algorithm
    out: dict = {}
    if algo in ("matroid-local-search", "system-local-search"):
        if algo == "matroid-local-search":
            t, c = 2, 1.0
            family = "matroid"
        else:
            q = params["q"]
            t, c = exchange_size(sys, q), p - 1 + 1 / q
            family = "system"
        m = constants.m(2 * s)
        M = constants.M(s, t)
        if report.variant == "non-oblivious" and params.get("M"):
            M = max(M, params["M"]) if constants.provenance == "exact" else params["M"]
        base = (m / M) ** 2 / c
        if report.stop_reason == "local-optimum":
            out["theorem"] = f"{family}-local-optimum"
            out["bound"] = base
        else:
            T = report.iterations_used
            rate = c * M / (s * m) if m > 0 else 0.0
            out["theorem"] = f"{family}-budget"
            out["bound"] = base * (1.0 - math.exp(-rate * T))
            out["T"] = T
        out.update(m=m, M=M, s=s, t=t)
    elif algo == "geometric-local-search":
        eps = params["epsilon"]
        m = constants.m(2 * s)
        M = constants.M(s, 2)
        if report.variant == "non-oblivious" and params.get("M"):
            M = max(M, params["M"])
        out["theorem"] = "geometric"
        out["bound"] = (m / M) ** 2 - eps
        ms, M1 = constants.m(s), constants.M(1, 1)
        delta = params["delta"]
        cap = math.ceil(math.log(s * M1 / ms) / math.log1p(delta)) if ms > 0 else None
        out["iteration_cap"] = cap
        out.update(m=m, M=M, s=s, t=2)
    elif algo == "modular":
        m1, ms = constants.m(1), constants.m(s)
        M1, Ms = constants.M(1, 1), constants.M(s, s)
        c = 1.0 if sys.is_matroid else p - 1 + 1 / params["q"]
        out["theorem"] = "modular"
        out["bound"] = m1 * ms / (M1 * Ms) / c
        out.update(s=s)
    else:
        out["theorem"] = None
    return out


def certify_run(
    report: RunReport,
    oracle: SetOracle,
    sys: IndependenceSystem,
    constants: RestrictedConstants | None,
    opt_value: float | None = None,
    tol: float = TOL,
) -> dict:
    """Check a finished run against the guarantee that covers it.

    Returns a JSON-ready record with ``status`` one of ``pass``, ``fail``,
    ``unverifiable`` (constants or OPT unavailable) or ``no-guarantee``.
    """
    cert = {
        "algorithm": report.algorithm,
        "variant": report.variant,
        "stop_reason": report.stop_reason,
        "final_value": report.final_value,
        "iterations": report.iterations_used,
    }
    if constants is None:
        cert["status"] = "unverifiable"
        return cert
    try:
        g = guarantee(report, sys, constants)
    except KeyError:
        cert["status"] = "unverifiable"
        return cert
    cert.update(g)
    if g["theorem"] is None:
        cert["status"] = "no-guarantee"
        return cert
    if opt_value is None:
        if sys.n > 20:
            cert["status"] = "unverifiable"
            return cert
        opt_value = brute_force_opt(oracle.clone(), sys)[1]
    cert["opt_value"] = opt_value
    cert["achieved_ratio"] = report.final_value / opt_value if opt_value > 0 else 1.0
    ok = report.final_value >= g["bound"] * opt_value - tol
    cap = g.get("iteration_cap")
    if cap is not None:
        cert["iterations_within_cap"] = report.iterations_used <= cap
        ok = ok and report.iterations_used <= cap
    cert["passed"] = bool(ok)
    cert["status"] = "pass" if ok else "fail"
    return cert
