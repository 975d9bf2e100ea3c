"""Smooth concave utilities and the set function they induce.

A utility ``u`` on R^n (normalised so that ``u(0) = 0``) defines

    f(X) = max { u(w) : supp(w) in X },

whose maximiser is written ``w^(X)``. :class:`SetOracle` evaluates ``f`` and
``grad u`` while counting calls, which is how the search algorithms are
compared.
"""

from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.special import expit, log_expit

from .constraints import SupportSet, as_support

log = logging.getLogger(__name__)

RIDGE = 1e-10


class SmoothObjective:
    """A concave, continuously differentiable ``u`` with ``u(0) = 0``.

    Subclasses implement ``value`` and ``gradient``; ``hessian`` is optional
    and switches the inner solver to Newton's method.
    """

    kind = "custom"
    n: int

    def value(self, w: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, w: np.ndarray, X: Sequence[int]) -> np.ndarray | None:
        """Hessian restricted to the rows/columns ``X``, or None."""
        return None

    def _check(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n,):
            raise ValueError(f"expected a vector of length {self.n}, got shape {w.shape}")
        return w


class QuadraticR2(SmoothObjective):
    """Squared multiple correlation ``1 - ||y - A w||^2 / ||y||^2``.

    Rows of ``A`` are samples and columns are the ground-set features.
    """

    kind = "quadratic-r2"

    def __init__(self, A, y):
        A = np.asarray(A, dtype=float)
        y = np.asarray(y, dtype=float)
        if A.ndim != 2 or y.shape != (A.shape[0],):
            raise ValueError("A must be samples x features and y one entry per sample")
        yy = float(y @ y)
        if yy == 0.0:
            raise ValueError("R^2 is undefined for a zero response vector")
        self.A = A
        self.y = y
        self.n = A.shape[1]
        self.yy = yy
        self.gram = A.T @ A
        self.corr = A.T @ y

    @property
    def curvature(self) -> np.ndarray:
        """The constant negative Hessian ``2 A^T A / ||y||^2``."""
        return 2.0 * self.gram / self.yy

    def value(self, w) -> float:
        w = self._check(w)
        r = self.y - self.A @ w
        return 1.0 - float(r @ r) / self.yy

    def gradient(self, w) -> np.ndarray:
        w = self._check(w)
        return 2.0 * self.A.T @ (self.y - self.A @ w) / self.yy

    def hessian(self, w, X):
        idx = list(X)
        return -self.curvature[np.ix_(idx, idx)]


class IsingPLL(SmoothObjective):
    """Pseudo-log-likelihood of a zero-field Ising model.

    Ground element ``e`` is the coupling on ``edges[e]``. With spins
    ``x in {-1, +1}^V`` the conditional of vertex v is
    ``sigma(2 x_v sum_u w_uv x_u)``; the objective sums its log over vertices
    and samples, shifted so that ``u(0) = 0``.
    """

    kind = "ising-pll"

    def __init__(self, samples, edges: Sequence[tuple[int, int]]):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2 or not np.all(np.abs(samples) == 1.0):
            raise ValueError("samples must be an N x |V| matrix of +-1")
        self.samples = samples
        self.edges = tuple((int(a), int(b)) for a, b in edges)
        self.n = len(self.edges)
        N, V = samples.shape
        # design[(i, v), e] = d z_v^i / d w_e for the local field z
        design = np.zeros((N, V, self.n))
        for e, (a, b) in enumerate(self.edges):
            prod = 2.0 * samples[:, a] * samples[:, b]
            design[:, a, e] = prod
            design[:, b, e] = prod
        self.design = design.reshape(N * V, self.n)
        self.offset = N * V * math.log(2.0)

    def value(self, w) -> float:
        w = self._check(w)
        return float(np.sum(log_expit(self.design @ w))) + self.offset

    def gradient(self, w) -> np.ndarray:
        w = self._check(w)
        return self.design.T @ expit(-(self.design @ w))

    def hessian(self, w, X):
        idx = list(X)
        z = self.design @ w
        c = expit(z) * expit(-z)
        D = self.design[:, idx]
        return -(D.T * c) @ D

    def smoothness_bound(self) -> float:
        """The crude bound ``4 sum_i ||x^i||_2^3`` on restricted smoothness."""
        norms = np.linalg.norm(self.samples, axis=1)
        return float(4.0 * np.sum(norms**3))


class CallableObjective(SmoothObjective):
    """Wrap user-supplied callables; ``u(0)`` is subtracted automatically."""

    def __init__(
        self,
        n: int,
        value_fn: Callable[[np.ndarray], float],
        grad_fn: Callable[[np.ndarray], np.ndarray],
    ):
        self.n = int(n)
        self._value_fn = value_fn
        self._grad_fn = grad_fn
        self.offset = float(value_fn(np.zeros(self.n)))

    def value(self, w) -> float:
        return float(self._value_fn(self._check(w))) - self.offset

    def gradient(self, w) -> np.ndarray:
        return np.asarray(self._grad_fn(self._check(w)), dtype=float)


@dataclass
class SetOracle:
    """Lift a :class:`SmoothObjective` to ``f`` and count oracle calls.

    Counters are per instance; use :meth:`clone` to give each concurrent run
    its own oracle over the same (read-only) objective.
    """

    objective: SmoothObjective
    tol: float = 1e-8
    max_iter: int = 500
    f_calls: int = 0
    grad_calls: int = 0
    fallbacks: int = 0

    @property
    def n(self) -> int:
        return self.objective.n

    def clone(self) -> "SetOracle":
        return SetOracle(self.objective, self.tol, self.max_iter)

    def reset(self) -> None:
        self.f_calls = self.grad_calls = self.fallbacks = 0

    def restricted_maximizer(self, X: Iterable[int]) -> tuple[np.ndarray, float]:
        """Return ``(w^(X), f(X))``; counts one f-evaluation."""
        X = as_support(X, self.n)
        self.f_calls += 1
        return self._solve(X)

    def value(self, X: Iterable[int]) -> float:
        return self.restricted_maximizer(X)[1]

    def gradient(self, w: np.ndarray) -> np.ndarray:
        """``grad u(w)``; counts one gradient evaluation."""
        self.grad_calls += 1
        return self.objective.gradient(w)

    def marginal_gain(self, X: Iterable[int], e: int) -> float:
        X = as_support(X, self.n)
        if e in X:
            raise ValueError(f"element {e} is already in {X}")
        return self.value(X + (e,)) - self.value(X)

    # inner solvers -----------------------------------------------------

    def _solve(self, X: SupportSet) -> tuple[np.ndarray, float]:
        obj = self.objective
        w = np.zeros(obj.n)
        if not X:
            return w, obj.value(w)
        if isinstance(obj, QuadraticR2):
            w[list(X)] = self._normal_equations(obj, X)
        elif obj.hessian(w, X) is not None:
            w = self._newton(obj, X)
        else:
            w = self._lbfgs(obj, X)
        return w, obj.value(w)

    def _normal_equations(self, obj: QuadraticR2, X: SupportSet) -> np.ndarray:
        idx = list(X)
        G = obj.gram[np.ix_(idx, idx)]
        rhs = obj.corr[idx]
        try:
            return scipy.linalg.cho_solve(scipy.linalg.cho_factor(G), rhs)
        except np.linalg.LinAlgError:
            self.fallbacks += 1
            warnings.warn(
                f"singular restricted system on {X}; adding ridge {RIDGE}",
                RuntimeWarning,
                stacklevel=3,
            )
            G = G + RIDGE * np.eye(len(idx))
            return scipy.linalg.cho_solve(scipy.linalg.cho_factor(G), rhs)

    def _newton(self, obj: SmoothObjective, X: SupportSet) -> np.ndarray:
        # damped Newton ascent on the coordinates in X
        idx = list(X)
        w = np.zeros(obj.n)
        val = obj.value(w)
        for _ in range(self.max_iter):
            g = obj.gradient(w)[idx]
            if np.linalg.norm(g) <= self.tol:
                return w
            H = obj.hessian(w, idx)
            try:
                step = np.linalg.solve(-H + RIDGE * np.eye(len(idx)), g)
            except np.linalg.LinAlgError:
                step = g
            if step @ g <= 0:
                step = g
            elif step @ g <= 1e-14 * max(1.0, abs(val)):
                # Newton decrement below what the value can resolve
                return w
            t = 1.0
            while t > 1e-12:
                cand = w.copy()
                cand[idx] += t * step
                cval = obj.value(cand)
                if cval >= val + 1e-4 * t * (step @ g):
                    break
                t *= 0.5
            else:
                return w
            if cval <= val:
                return w
            w, val = cand, cval
        self.fallbacks += 1
        log.warning("inner solver hit max_iter on %s", X)
        return w

    def _lbfgs(self, obj: SmoothObjective, X: SupportSet) -> np.ndarray:
        idx = list(X)

        def neg(v):
            w = np.zeros(obj.n)
            w[idx] = v
            return -obj.value(w), -obj.gradient(w)[idx]

        res = scipy.optimize.minimize(
            neg,
            np.zeros(len(idx)),
            jac=True,
            method="L-BFGS-B",
            options={"gtol": self.tol, "ftol": 0.0, "maxiter": self.max_iter},
        )
        w = np.zeros(obj.n)
        w[idx] = res.x
        return w


# restricted strong concavity / smoothness --------------------------------


@dataclass
class RestrictedConstants:
    """Restricted strong concavity and smoothness constants.

    Values are stored per support size: ``m_by_size[k]`` bounds curvature
    from below along directions supported on k coordinates and
    ``M_by_size[k]`` from above. Because the difference of two vectors in
    Omega_{s,t} has support at most ``min(t, 2s, n)``,

        m(s)    = m_by_size[min(s, n)]
        M(s, t) = M_by_size[min(t, 2s, n)].

    Sizes that were never computed are absent and raise ``KeyError``.
    """

    n: int
    m_by_size: dict[int, float] = field(default_factory=dict)
    M_by_size: dict[int, float] = field(default_factory=dict)
    provenance: str = "exact"
    M_bound: float | None = None

    def m(self, s: int) -> float:
        return self.m_by_size[min(s, self.n)]

    def M(self, s: int, t: int) -> float:
        if self.M_bound is not None:
            return self.M_bound
        return self.M_by_size[min(t, 2 * s, self.n)]

    def has_m(self, s: int) -> bool:
        return min(s, self.n) in self.m_by_size

    def to_dict(self, s_max: int | None = None, t_list: Sequence[int] = (1, 2)) -> dict:
        s_max = s_max or self.n
        m = {str(s): self.m(s) for s in range(1, s_max + 1) if self.has_m(s)}
        M = {}
        for s in range(1, s_max + 1):
            for t in t_list:
                try:
                    M[f"{s},{t}"] = self.M(s, t)
                except KeyError:
                    pass
        return {
            "provenance": self.provenance,
            "n": self.n,
            "m": m,
            "M": M,
            "m_by_size": {str(k): v for k, v in sorted(self.m_by_size.items())},
            "M_by_size": {str(k): v for k, v in sorted(self.M_by_size.items())},
            "M_bound": self.M_bound,
        }


def extreme_eigenvalues(H: np.ndarray, k: int, chunk: int = 20000) -> tuple[float, float]:
    """Min of lambda_min and max of lambda_max over all k x k principal submatrices."""
    n = H.shape[0]
    lo, hi = math.inf, -math.inf
    combos = itertools.combinations(range(n), k)
    while True:
        batch = list(itertools.islice(combos, chunk))
        if not batch:
            break
        idx = np.array(batch)
        sub = H[idx[:, :, None], idx[:, None, :]]
        ev = np.linalg.eigvalsh(sub)
        lo = min(lo, float(ev[:, 0].min()))
        hi = max(hi, float(ev[:, -1].max()))
    return lo, hi


def compute_restricted_constants(
    obj: SmoothObjective,
    s_max: int,
    t_list: Sequence[int] = (1, 2),
    mode: str = "exact",
    *,
    sizes: Iterable[int] | None = None,
    n_samples: int = 2000,
    scale: float = 1.0,
    seed: int = 0,
) -> RestrictedConstants:
    """Compute m_s (s <= s_max) and M_{s,t} (t in t_list).

    ``exact`` enumerates principal submatrices of the constant curvature of a
    quadratic objective (n <= 20). ``sampled`` takes the empirical extremes of
    the curvature quotient over random sparse pairs. ``bound`` applies the
    closed-form smoothness bound of the Ising objective and leaves m unknown.

    ``sizes`` overrides the support sizes to evaluate; by default every size
    needed for ``m(1..s_max)``, ``m(2s)`` and ``M(s, t)`` is computed.
    """
    n = obj.n
    if sizes is None:
        need = set()
        for s in range(1, s_max + 1):
            need.add(min(s, n))
            need.add(min(2 * s, n))
            for t in t_list:
                need.add(min(t, 2 * s, n))
        sizes = need
    sizes = sorted({int(k) for k in sizes if k >= 1})

    if mode == "exact":
        if not isinstance(obj, QuadraticR2):
            raise ValueError("exact constants are only available for quadratic objectives")
        if n > 20:
            raise ValueError("exact constants need n <= 20")
        H = obj.curvature
        out = RestrictedConstants(n, provenance="exact")
        for k in sizes:
            lo, hi = extreme_eigenvalues(H, k)
            out.m_by_size[k] = max(lo, 0.0)
            out.M_by_size[k] = hi
        return out

    if mode == "bound":
        if not isinstance(obj, IsingPLL):
            raise ValueError("the closed-form bound is only defined for the Ising objective")
        return RestrictedConstants(n, provenance="upper-bound", M_bound=obj.smoothness_bound())

    if mode == "sampled":
        rng = np.random.default_rng(seed)
        out = RestrictedConstants(n, provenance="sampled")
        for k in sizes:
            lo, hi = math.inf, -math.inf
            for _ in range(n_samples):
                S = rng.choice(n, size=k, replace=False)
                x = np.zeros(n)
                x[S] = scale * rng.standard_normal(k)
                d = np.zeros(n)
                d[S] = scale * rng.standard_normal(k)
                y = x + d
                gap = obj.value(y) - obj.value(x) - obj.gradient(x) @ d
                qv = -2.0 * gap / float(d @ d)
                lo, hi = min(lo, qv), max(hi, qv)
            out.m_by_size[k] = max(lo, 0.0)
            out.M_by_size[k] = hi
        return out

    raise ValueError(f"unknown mode {mode!r}")
