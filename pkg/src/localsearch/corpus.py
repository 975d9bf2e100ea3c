"""A fixed corpus of small quadratic instances for exhaustive checking.

Every instance has at most eight ground elements, so brute force over all
subsets stays cheap. Designs have 12 rows of correlated Gaussian noise and
full column rank, which keeps every restricted concavity constant positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import (
    BMatching,
    IndependenceSystem,
    MatroidIntersection,
    PartitionMatroid,
    UniformMatroid,
)
from .objectives import QuadraticR2, RestrictedConstants, SetOracle, compute_restricted_constants

N_ROWS = 12
CORPUS_SEED = 20240601


@dataclass
class Instance:
    name: str
    A: np.ndarray
    y: np.ndarray
    system: IndependenceSystem
    _constants: RestrictedConstants | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def objective(self) -> QuadraticR2:
        return QuadraticR2(self.A, self.y)

    def oracle(self) -> SetOracle:
        return SetOracle(self.objective())

    def constants(self) -> RestrictedConstants:
        """Exact constants for every support size (cached)."""
        if self._constants is None:
            n = self.n
            self._constants = compute_restricted_constants(
                self.objective(), n, range(1, n + 1), sizes=range(1, n + 1)
            )
        return self._constants


def correlated_design(rng: np.random.Generator, n: int, rho: float, rows: int = N_ROWS):
    """Rows drawn from N(0, C) with C_ij = rho^|i-j|, plus a noisy response."""
    idx = np.arange(n)
    C = rho ** np.abs(idx[:, None] - idx[None, :])
    L = np.linalg.cholesky(C)
    A = rng.standard_normal((rows, n)) @ L.T
    w = np.zeros(n)
    support = rng.choice(n, size=max(1, n // 2), replace=False)
    w[support] = rng.standard_normal(support.size)
    y = A @ w + 0.3 * rng.standard_normal(rows)
    return A, y


def _graph_edges(name: str):
    return {
        "path5": (5, [(0, 1), (1, 2), (2, 3), (3, 4)]),
        "cycle6": (6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)]),
        "k4": (4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
        "k4+tail": (6, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4), (4, 5)]),
        "star+tri": (6, [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (3, 4), (4, 5)]),
    }[name]


def _systems():
    """(label, n, system) triples making up the corpus."""
    out = []
    for n, s in [(5, 1), (5, 2), (6, 2), (6, 3), (7, 2), (7, 3), (8, 2), (8, 3), (8, 4)]:
        out.append((f"uniform-n{n}-s{s}", n, UniformMatroid(n, s)))
    partitions = [
        (6, [0, 0, 0, 1, 1, 1], [1, 1]),
        (6, [0, 0, 0, 1, 1, 1], [2, 1]),
        (6, [0, 0, 1, 1, 2, 2], [1, 1, 1]),
        (7, [0, 0, 0, 0, 1, 1, 1], [2, 2]),
        (8, [0, 0, 1, 1, 2, 2, 3, 3], [1, 1, 1, 1]),
        (8, [0, 0, 0, 0, 1, 1, 1, 1], [2, 1]),
        (8, [0, 0, 0, 1, 1, 1, 2, 2], [1, 2, 1]),
    ]
    for k, (n, parts, caps) in enumerate(partitions):
        out.append((f"partition-{k}-n{n}", n, PartitionMatroid(parts, caps)))
    intersections = [
        (6, [0, 0, 1, 1, 2, 2], [1, 1, 1], [0, 1, 0, 1, 0, 1], [2, 1]),
        (6, [0, 0, 0, 1, 1, 1], [1, 1], [0, 1, 2, 0, 1, 2], [1, 1, 1]),
        (7, [0, 0, 0, 1, 1, 1, 1], [2, 2], [0, 1, 0, 1, 0, 1, 0], [1, 2]),
        (8, [0, 0, 1, 1, 2, 2, 3, 3], [1, 1, 1, 1], [0, 1, 0, 1, 0, 1, 0, 1], [2, 1]),
        (8, [0, 0, 0, 0, 1, 1, 1, 1], [2, 2], [0, 0, 1, 1, 2, 2, 3, 3], [1, 1, 1, 1]),
        (8, [0, 1, 2, 3, 0, 1, 2, 3], [1, 1, 1, 1], [0, 0, 0, 0, 1, 1, 1, 1], [2, 2]),
    ]
    for k, (n, p1, c1, p2, c2) in enumerate(intersections):
        sys = MatroidIntersection([PartitionMatroid(p1, c1), PartitionMatroid(p2, c2)])
        out.append((f"intersection-{k}-n{n}", n, sys))
    for graph, b in [("path5", 1), ("cycle6", 1), ("k4", 1), ("k4", 2), ("k4+tail", 1),
                     ("k4+tail", 2), ("star+tri", 1), ("star+tri", 2)]:
        V, edges = _graph_edges(graph)
        out.append((f"bmatching-{graph}-b{b}", len(edges), BMatching(V, edges, b)))
    return out


def build_corpus(seed: int = CORPUS_SEED) -> list[Instance]:
    """The bundled corpus; deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    corpus = []
    for k, (label, n, sys) in enumerate(_systems()):
        rho = (0.0, 0.3, 0.6)[k % 3]
        A, y = correlated_design(rng, n, rho)
        corpus.append(Instance(label, A, y, sys))
    return corpus


def orthogonal_instance(n: int = 5, seed: int = 0) -> Instance:
    """A design with orthonormal columns, so f is exactly modular."""
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((N_ROWS, n)))
    y = rng.standard_normal(N_ROWS)
    return Instance(f"orthogonal-n{n}", Q, y, UniformMatroid(n, min(3, n)))
