"""Synthetic dataset generators and their JSON persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .constraints import BMatching, PartitionMatroid, complete_graph_edges
from .objectives import IsingPLL, QuadraticR2

SCHEMA_VERSION = 1
MAX_SIMPLE_TRIES = 10_000


class DataError(ValueError):
    """Malformed or inconsistent dataset input."""


@dataclass
class RegressionDataset:
    A: np.ndarray
    y: np.ndarray
    partition: list[int]
    capacity: list[int]
    true_support: list[int]
    true_weights: list[float]
    seed: int
    dataset_id: str = ""
    kind: str = field(default="regression", init=False)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def objective(self) -> QuadraticR2:
        return QuadraticR2(self.A, self.y)

    def constraint(self, capacity: int | None = None) -> PartitionMatroid:
        caps = self.capacity if capacity is None else [capacity] * len(self.capacity)
        return PartitionMatroid(self.partition, caps)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "dataset_id": self.dataset_id,
            "metadata": {
                "seed": self.seed,
                "n_samples": int(self.A.shape[0]),
                "n_features": int(self.A.shape[1]),
                "partition": list(self.partition),
                "capacity": list(self.capacity),
                "true_support": list(self.true_support),
                "true_weights": list(self.true_weights),
            },
            "A": self.A.tolist(),
            "y": self.y.tolist(),
        }


@dataclass
class IsingDataset:
    n_vertices: int
    true_edges: list[tuple[int, int]]
    true_weights: list[float]
    samples: np.ndarray
    degree: int
    seed: int
    dataset_id: str = ""
    kind: str = field(default="ising", init=False)

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Ground set: every vertex pair."""
        return complete_graph_edges(self.n_vertices)

    @property
    def n(self) -> int:
        return len(self.edges)

    def objective(self) -> IsingPLL:
        return IsingPLL(self.samples, self.edges)

    def constraint(self, b: int | None = None) -> BMatching:
        return BMatching(self.n_vertices, self.edges, self.degree if b is None else b)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "dataset_id": self.dataset_id,
            "metadata": {
                "seed": self.seed,
                "n_vertices": self.n_vertices,
                "degree": self.degree,
                "true_edges": [list(e) for e in self.true_edges],
                "true_weights": list(self.true_weights),
            },
            "samples": self.samples.astype(int).tolist(),
        }


def gen_regression(
    n_samples: int = 50,
    n_features: int = 20,
    n_parts: int = 4,
    per_part_truth: int = 2,
    noise_sd: float = 0.2,
    seed: int = 0,
) -> RegressionDataset:
    """Sparse linear model with a partitioned feature set.

    Entries are U[0, 1], then every column is standardised (population sd).
    Parts are contiguous blocks of equal size; ``per_part_truth`` features of
    each part carry standard-normal weights.
    """
    if n_parts < 1 or n_features % n_parts:
        raise DataError(f"n_features={n_features} is not divisible by n_parts={n_parts}")
    size = n_features // n_parts
    if not 0 <= per_part_truth <= size:
        raise DataError("per_part_truth must lie between 0 and the part size")
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.0, 1.0, size=(n_samples, n_features))
    A = (A - A.mean(axis=0)) / A.std(axis=0)
    partition = [j // size for j in range(n_features)]
    support = []
    for k in range(n_parts):
        picks = rng.choice(size, size=per_part_truth, replace=False)
        support.extend(sorted(int(k * size + j) for j in picks))
    w = rng.standard_normal(len(support))
    y = A[:, support] @ w + rng.normal(0.0, noise_sd, size=n_samples)
    if not np.any(y):
        raise DataError("response vector is identically zero")
    return RegressionDataset(
        A=A,
        y=y,
        partition=partition,
        capacity=[per_part_truth] * n_parts,
        true_support=support,
        true_weights=[float(v) for v in w],
        seed=seed,
        dataset_id=f"regression-{n_samples}x{n_features}-s{seed}",
    )


def random_regular_graph(n_vertices: int, degree: int, rng: np.random.Generator):
    """Configuration model, resampled until the pairing is simple."""
    if degree >= n_vertices or degree < 0:
        raise DataError(f"degree {degree} infeasible for {n_vertices} vertices")
    if (n_vertices * degree) % 2:
        raise DataError("n_vertices * degree must be even")
    stubs = np.repeat(np.arange(n_vertices), degree)
    for _ in range(MAX_SIMPLE_TRIES):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        edges = {tuple(sorted(map(int, p))) for p in pairs}
        if len(edges) == len(pairs) and all(u != v for u, v in edges):
            return sorted(edges)
    raise DataError("could not draw a simple regular graph")


def gibbs_sample(
    W: np.ndarray, n_samples: int, burn_in: int, thin: int, rng: np.random.Generator
) -> np.ndarray:
    """Random-scan Gibbs sampler for a zero-field Ising model.

    One sweep is |V| single-site updates at uniformly chosen vertices.
    """
    V = W.shape[0]
    x = rng.choice([-1.0, 1.0], size=V)
    out = np.empty((n_samples, V))

    def sweep():
        for v in rng.integers(0, V, size=V):
            x[v] = 1.0 if rng.random() < expit(2.0 * W[v] @ x) else -1.0

    for _ in range(burn_in):
        sweep()
    for i in range(n_samples):
        for _ in range(thin):
            sweep()
        out[i] = x
    return out


def gen_ising(
    n_vertices: int = 6,
    degree: int = 3,
    n_samples: int = 100,
    burn_in: int = 200,
    thin: int = 10,
    seed: int = 0,
) -> IsingDataset:
    """Samples from an Ising model on a random ``degree``-regular graph with
    couplings +-0.5."""
    rng = np.random.default_rng(seed)
    edges = random_regular_graph(n_vertices, degree, rng)
    weights = rng.choice([-0.5, 0.5], size=len(edges))
    W = np.zeros((n_vertices, n_vertices))
    for (u, v), wt in zip(edges, weights):
        W[u, v] = W[v, u] = wt
    samples = gibbs_sample(W, n_samples, burn_in, thin, rng)
    return IsingDataset(
        n_vertices=n_vertices,
        true_edges=edges,
        true_weights=[float(v) for v in weights],
        samples=samples,
        degree=degree,
        seed=seed,
        dataset_id=f"ising-{n_vertices}v-d{degree}-s{seed}",
    )


def magnetization_autocorrelation(samples: np.ndarray, lag: int = 1) -> float:
    """Lag autocorrelation of the mean spin across consecutive samples."""
    m = samples.mean(axis=1)
    m = m - m.mean()
    denom = float(m @ m)
    if denom == 0.0:
        return 0.0
    return float(m[:-lag] @ m[lag:]) / denom


# persistence ---------------------------------------------------------------


def dataset_from_dict(d: dict):
    if d.get("schema_version") != SCHEMA_VERSION:
        raise DataError(f"unsupported schema_version {d.get('schema_version')!r}")
    meta = d.get("metadata", {})
    try:
        if d["kind"] == "regression":
            A = np.asarray(d["A"], dtype=float)
            y = np.asarray(d["y"], dtype=float)
            if A.ndim != 2 or y.shape != (A.shape[0],):
                raise DataError("A and y have inconsistent shapes")
            if not np.any(y):
                raise DataError("response vector is identically zero")
            return RegressionDataset(
                A=A,
                y=y,
                partition=list(meta["partition"]),
                capacity=list(meta["capacity"]),
                true_support=list(meta.get("true_support", [])),
                true_weights=list(meta.get("true_weights", [])),
                seed=meta.get("seed", 0),
                dataset_id=d.get("dataset_id", ""),
            )
        if d["kind"] == "ising":
            samples = np.asarray(d["samples"], dtype=float)
            if samples.ndim != 2 or not np.all(np.abs(samples) == 1.0):
                raise DataError("samples must be a matrix of +-1")
            return IsingDataset(
                n_vertices=int(meta["n_vertices"]),
                true_edges=[tuple(e) for e in meta.get("true_edges", [])],
                true_weights=list(meta.get("true_weights", [])),
                samples=samples,
                degree=int(meta["degree"]),
                seed=meta.get("seed", 0),
                dataset_id=d.get("dataset_id", ""),
            )
    except KeyError as exc:
        raise DataError(f"missing field {exc}") from exc
    raise DataError(f"unknown dataset kind {d.get('kind')!r}")


def save_dataset(ds, path) -> None:
    Path(path).write_text(json.dumps(ds.to_dict(), indent=1) + "\n")


def load_dataset(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset {path} not found")
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return dataset_from_dict(d)
