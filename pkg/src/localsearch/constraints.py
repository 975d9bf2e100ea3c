"""Independence systems over the ground set ``{0, ..., n-1}``.

Solutions are represented as sorted tuples of element ids (``SupportSet``).
Every system is immutable once built and answers feasibility queries without
side effects, so one instance can be shared between concurrent runs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

SupportSet = tuple[int, ...]

#: Guard for the n^O(q) neighbourhood enumeration on p-systems.
MAX_REACH_Q = 3
MAX_REACH_N = 64


class ConfigurationError(ValueError):
    """Raised when an algorithm is asked to run on an unsupported setup."""


class InfeasibleError(ValueError):
    """Raised when an operation requires a feasible set and gets another."""


def as_support(members: Iterable[int], n: int | None = None) -> SupportSet:
    """Normalise ``members`` into a sorted, duplicate-free tuple.

    Raises ``ValueError`` if an id is negative or, when ``n`` is given, not
    below ``n``.
    """
    out = tuple(sorted({int(e) for e in members}))
    if out and out[0] < 0:
        raise ValueError(f"element id {out[0]} out of range")
    if n is not None and out and out[-1] >= n:
        raise ValueError(f"element id {out[-1]} out of range for n={n}")
    return out


def swap(X: SupportSet, drop: Iterable[int], add: Iterable[int]) -> SupportSet:
    """Return ``(X \\ drop) | add`` as a support set."""
    d = set(drop)
    return tuple(sorted([e for e in X if e not in d] + list(add)))


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Size caps of the q-reachable neighbourhood.

    For a p-matroid intersection a solution may gain up to ``2q`` elements and
    lose up to ``2pq``; for a p-exchange system it may gain ``q`` and lose
    ``pq - q + 1``.
    """

    q: int
    add_cap: int
    drop_cap: int

    @classmethod
    def for_system(cls, sys: "IndependenceSystem", q: int) -> "NeighborhoodSpec":
        if q < 1:
            raise ConfigurationError("q must be a positive integer")
        p = sys.p
        if sys.family == "intersection":
            return cls(q, 2 * q, 2 * p * q)
        if sys.family == "exchange":
            return cls(q, q, p * q - q + 1)
        raise ConfigurationError(
            f"{sys.kind} is a single matroid; use swap_neighborhood instead"
        )


class IndependenceSystem:
    """Base class: feasibility oracle plus structural metadata.

    Subclasses set ``kind``, ``family`` (``"matroid"``, ``"intersection"`` or
    ``"exchange"``), ``p`` and ``n`` and implement ``_feasible``.
    """

    kind: str = "abstract"
    family: str = "matroid"
    p: int = 1
    n: int

    def _feasible(self, X: SupportSet) -> bool:
        raise NotImplementedError

    @property
    def rank(self) -> int:
        """Largest cardinality of a feasible set."""
        raise NotImplementedError

    @property
    def is_matroid(self) -> bool:
        return self.family == "matroid"

    def is_independent(self, X: Iterable[int]) -> bool:
        X = as_support(X, self.n)
        return self._feasible(X)

    def extend_to_maximal(
        self, X: Iterable[int] = (), order: Sequence[int] | None = None
    ) -> SupportSet:
        """Greedily add elements in ``order`` (ascending ids by default)."""
        X = as_support(X, self.n)
        if not self._feasible(X):
            raise InfeasibleError(f"{X} is not independent")
        if order is None:
            order = range(self.n)
        current = set(X)
        for e in order:
            e = int(e)
            if e in current:
                continue
            trial = tuple(sorted(current | {e}))
            if self._feasible(trial):
                current.add(e)
        return tuple(sorted(current))

    def swap_neighborhood(self, X: Iterable[int]) -> Iterator[tuple[int, int]]:
        """Yield every feasible single swap ``(x, x')`` with x in X, x' outside.

        Pairs come out ordered by ``x`` then ``x'``.
        """
        if not self.is_matroid:
            raise ConfigurationError("swap_neighborhood needs a single matroid")
        X = as_support(X, self.n)
        inside = set(X)
        outside = [e for e in range(self.n) if e not in inside]
        for x in X:
            for xp in outside:
                if self._feasible(swap(X, (x,), (xp,))):
                    yield x, xp

    def reachable_moves(
        self, X: Iterable[int], spec: NeighborhoodSpec, *, override: bool = False
    ) -> Iterator[tuple[SupportSet, SupportSet]]:
        """Yield ``(drop, add)`` for every q-reachable feasible neighbour.

        Enumeration is by add-set size, then add-set, then drop-set size, then
        drop-set, all lexicographic. The empty move is skipped, so ``X`` itself
        never appears.
        """
        if self.p < 2 or self.is_matroid:
            raise ConfigurationError(
                "q-reachable neighbourhoods are for p >= 2 systems; "
                "single matroids use swap_neighborhood"
            )
        if not override and (spec.q > MAX_REACH_Q or self.n > MAX_REACH_N):
            raise ConfigurationError(
                f"neighbourhood too large (q={spec.q}, n={self.n}); pass override=True"
            )
        X = as_support(X, self.n)
        inside = set(X)
        outside = [e for e in range(self.n) if e not in inside]
        for a in range(min(spec.add_cap, len(outside)) + 1):
            for add in itertools.combinations(outside, a):
                for d in range(min(spec.drop_cap, len(X)) + 1):
                    if a == 0 and d == 0:
                        continue
                    for drop in itertools.combinations(X, d):
                        if self._feasible(swap(X, drop, add)):
                            yield drop, add

    def q_reachable_neighborhood(
        self, X: Iterable[int], spec: NeighborhoodSpec, *, override: bool = False
    ) -> Iterator[SupportSet]:
        X = as_support(X, self.n)
        for drop, add in self.reachable_moves(X, spec, override=override):
            yield swap(X, drop, add)

    def feasible_sets(self) -> Iterator[SupportSet]:
        """Enumerate every feasible set by depth-first search.

        Downward closure lets a branch be cut as soon as it turns infeasible.
        """

        def grow(current: SupportSet, start: int) -> Iterator[SupportSet]:
            yield current
            for e in range(start, self.n):
                nxt = current + (e,)
                if self._feasible(nxt):
                    yield from grow(nxt, e + 1)

        return grow((), 0)

    def maximal_sets(self) -> Iterator[SupportSet]:
        """Inclusion-maximal feasible sets, in depth-first order."""
        for X in self.feasible_sets():
            inside = set(X)
            if all(
                e in inside or not self._feasible(tuple(sorted(X + (e,))))
                for e in range(self.n)
            ):
                yield X

    def _brute_force_rank(self) -> int:
        best = 0
        for X in self.feasible_sets():
            best = max(best, len(X))
        return best

    def describe(self) -> dict:
        raise NotImplementedError


class UniformMatroid(IndependenceSystem):
    kind = "uniform-matroid"

    def __init__(self, n: int, s: int):
        if n < 1:
            raise ValueError("ground set must be non-empty")
        if s < 0:
            raise ValueError("capacity must be non-negative")
        self.n = int(n)
        self.s = int(s)

    def _feasible(self, X: SupportSet) -> bool:
        return len(X) <= self.s

    @property
    def rank(self) -> int:
        return min(self.s, self.n)

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n, "s": self.s}


class PartitionMatroid(IndependenceSystem):
    """At most ``capacities[j]`` elements from each part ``j``."""

    kind = "partition-matroid"

    def __init__(self, parts: Sequence[int], capacities: Sequence[int] | int):
        parts = [int(j) for j in parts]
        if not parts:
            raise ValueError("ground set must be non-empty")
        n_parts = max(parts) + 1
        if min(parts) < 0:
            raise ValueError("part ids must be non-negative")
        if isinstance(capacities, (int, np.integer)):
            capacities = [int(capacities)] * n_parts
        capacities = [int(c) for c in capacities]
        if len(capacities) < n_parts:
            raise ValueError("one capacity per part is required")
        self.n = len(parts)
        self.parts = tuple(parts)
        self.capacities = tuple(capacities)

    def _feasible(self, X: SupportSet) -> bool:
        counts: dict[int, int] = {}
        for e in X:
            j = self.parts[e]
            counts[j] = counts.get(j, 0) + 1
            if counts[j] > self.capacities[j]:
                return False
        return True

    @property
    def rank(self) -> int:
        sizes = np.bincount(self.parts, minlength=len(self.capacities))
        return int(sum(min(c, k) for c, k in zip(self.capacities, sizes)))

    def maximal_sets(self) -> Iterator[SupportSet]:
        # bases are products of per-part choices
        blocks = {}
        for e, j in enumerate(self.parts):
            blocks.setdefault(j, []).append(e)
        choices = [
            list(itertools.combinations(blocks[j], min(self.capacities[j], len(blocks[j]))))
            for j in sorted(blocks)
        ]
        for combo in itertools.product(*choices):
            yield tuple(sorted(e for part in combo for e in part))

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "parts": list(self.parts),
            "capacities": list(self.capacities),
        }


class MatroidIntersection(IndependenceSystem):
    """Sets independent in every member matroid."""

    kind = "matroid-intersection"
    family = "intersection"

    def __init__(self, matroids: Sequence[IndependenceSystem], rank: int | None = None):
        if len(matroids) < 2:
            raise ValueError("an intersection needs at least two matroids")
        ns = {m.n for m in matroids}
        if len(ns) != 1:
            raise ValueError("member matroids must share the ground set")
        if any(not m.is_matroid for m in matroids):
            raise ValueError("members must be single matroids")
        self.matroids = tuple(matroids)
        self.n = ns.pop()
        self.p = len(self.matroids)
        if rank is None:
            if self.n > 20:
                raise ValueError("rank must be supplied when n > 20")
            rank = self._brute_force_rank()
        self._rank = int(rank)

    def _feasible(self, X: SupportSet) -> bool:
        return all(m._feasible(X) for m in self.matroids)

    @property
    def rank(self) -> int:
        return self._rank

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "matroids": [m.describe() for m in self.matroids],
            "rank": self._rank,
        }


class BMatching(IndependenceSystem):
    """Edge sets in which every vertex has degree at most ``b``.

    Ground element ``e`` is the edge ``edges[e]``. This is a 2-exchange
    system.
    """

    kind = "b-matching"
    family = "exchange"
    p = 2

    def __init__(
        self,
        n_vertices: int,
        edges: Sequence[tuple[int, int]],
        b: int,
        rank: int | None = None,
    ):
        edges = [(int(u), int(v)) for u, v in edges]
        if not edges:
            raise ValueError("ground set must be non-empty")
        for u, v in edges:
            if u == v or not (0 <= u < n_vertices and 0 <= v < n_vertices):
                raise ValueError(f"bad edge ({u}, {v})")
        if b < 0:
            raise ValueError("degree bound must be non-negative")
        self.n_vertices = int(n_vertices)
        self.edges = tuple(edges)
        self.b = int(b)
        self.n = len(edges)
        if rank is None:
            if self.n > 40:
                raise ValueError("rank must be supplied when there are > 40 edges")
            rank = self._max_b_matching()
        self._rank = int(rank)

    def _feasible(self, X: SupportSet) -> bool:
        deg = [0] * self.n_vertices
        for e in X:
            u, v = self.edges[e]
            deg[u] += 1
            deg[v] += 1
            if deg[u] > self.b or deg[v] > self.b:
                return False
        return True

    def _max_b_matching(self) -> int:
        # branch and bound on edges; also capped by b * |V| / 2
        cap = self.b * self.n_vertices // 2
        best = 0
        deg = [0] * self.n_vertices

        def search(i: int, size: int) -> None:
            nonlocal best
            if size > best:
                best = size
            if best >= cap or i == self.n or size + (self.n - i) <= best:
                return
            u, v = self.edges[i]
            if deg[u] < self.b and deg[v] < self.b:
                deg[u] += 1
                deg[v] += 1
                search(i + 1, size + 1)
                deg[u] -= 1
                deg[v] -= 1
            search(i + 1, size)

        search(0, 0)
        return best

    @property
    def rank(self) -> int:
        return self._rank

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "n_vertices": self.n_vertices,
            "edges": [list(e) for e in self.edges],
            "b": self.b,
            "rank": self._rank,
        }


def system_from_dict(d: dict) -> IndependenceSystem:
    """Rebuild a system from the output of ``describe``."""
    kind = d["kind"]
    if kind == "uniform-matroid":
        return UniformMatroid(d["n"], d["s"])
    if kind == "partition-matroid":
        return PartitionMatroid(d["parts"], d["capacities"])
    if kind == "matroid-intersection":
        return MatroidIntersection(
            [system_from_dict(m) for m in d["matroids"]], rank=d.get("rank")
        )
    if kind == "b-matching":
        return BMatching(
            d["n_vertices"], [tuple(e) for e in d["edges"]], d["b"], rank=d.get("rank")
        )
    raise ValueError(f"unknown constraint kind {kind!r}")


def complete_graph_edges(n_vertices: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(n_vertices), 2))


def is_p_exchange(sys: IndependenceSystem, p: int) -> tuple[bool, tuple | None]:
    """Brute-force check of the p-exchange axioms on a small system.

    For every pair of feasible sets S, T a map phi from T \\ S to subsets of
    S \\ T is searched for such that each image has at most p elements, each
    element of S \\ T is used at most p times, and removing the images of
    any subset Y of T \\ S before adding Y keeps S feasible.

    Returns ``(True, None)`` or ``(False, (S, T))`` for the first violation.
    """
    feasible = list(sys.feasible_sets())
    for S in feasible:
        for T in feasible:
            if not _exchange_map_exists(sys, S, T, p):
                return False, (S, T)
    return True, None


def _exchange_map_exists(sys, S: SupportSet, T: SupportSet, p: int) -> bool:
    new = [v for v in T if v not in S]
    old = [v for v in S if v not in T]
    if not new:
        return True
    # candidate images per new element: those passing the single-element test
    choices = []
    for v in new:
        opts = []
        for k in range(min(p, len(old)) + 1):
            for img in itertools.combinations(old, k):
                if sys._feasible(swap(S, img, (v,))):
                    opts.append(frozenset(img))
        if not opts:
            return False
        choices.append(opts)

    for phi in itertools.product(*choices):
        use: dict[int, int] = {}
        ok = True
        for img in phi:
            for x in img:
                use[x] = use.get(x, 0) + 1
                if use[x] > p:
                    ok = False
        if not ok:
            continue
        if all(
            sys._feasible(swap(S, frozenset().union(*(phi[i] for i in idx)), [new[i] for i in idx]))
            for r in range(2, len(new) + 1)
            for idx in itertools.combinations(range(len(new)), r)
        ):
            return True
    return False
