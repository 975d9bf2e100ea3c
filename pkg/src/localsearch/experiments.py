"""Experiment specs, the sweep runner and result persistence.

A spec names a dataset (a JSON file, or a generator re-seeded per trial), a
sweep over the constraint parameter (partition capacity for regression,
degree bound for Ising), a number of trials and a list of algorithms. The
runner writes one CSV row per (sweep value, trial, algorithm) and a JSON
list of certificates.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import brute_force_opt, greedy, modular_approximation, random_baseline
from .certify import certify_run
from .constraints import IndependenceSystem
from .datasets import DataError, gen_ising, gen_regression, load_dataset
from .objectives import RestrictedConstants, SetOracle, compute_restricted_constants
from .search import RunConfig, geometric_local_search, local_search

SCHEMA_VERSION = 1
CSV_COLUMNS = [
    "dataset_id",
    "sweep_value",
    "trial",
    "algorithm",
    "variant",
    "q",
    "final_value",
    "opt_value",
    "ratio",
    "iterations",
    "f_calls",
    "grad_calls",
    "wall_ms",
    "stop_reason",
]
LOCAL_SEARCH = {"oblivious", "semi-oblivious", "non-oblivious"}
ALGORITHMS = LOCAL_SEARCH | {"geometric", "greedy", "modular", "random"}
ALIASES = {"semi": "semi-oblivious", "non": "non-oblivious", "obl": "oblivious"}
GENERATORS = {"regression": gen_regression, "ising": gen_ising}
OPT_MAX_N = 20


class SpecError(ValueError):
    """Invalid experiment spec."""


@dataclass
class AlgorithmSpec:
    id: str
    q: int = 1
    T: int = 1000
    epsilon: float | None = None
    init: str | None = None

    @classmethod
    def from_obj(cls, obj) -> "AlgorithmSpec":
        if isinstance(obj, str):
            obj = {"id": obj}
        obj = dict(obj)
        obj["id"] = ALIASES.get(obj.get("id"), obj.get("id"))
        if obj["id"] not in ALGORITHMS:
            raise SpecError(f"unknown algorithm id {obj['id']!r}")
        if obj["id"] == "geometric" and obj.get("epsilon") is None:
            obj["epsilon"] = 0.1
        unknown = set(obj) - {"id", "q", "T", "epsilon", "init"}
        if unknown:
            raise SpecError(f"unknown algorithm fields {sorted(unknown)}")
        return cls(**obj)


@dataclass
class ExperimentSpec:
    dataset: dict
    algorithms: list[AlgorithmSpec]
    sweep_values: list[int]
    trials: int = 1
    seed: int = 0
    opt: bool = True
    certify: bool = True
    timing: bool = True
    results: str = "results.csv"
    certs: str = "certs.json"
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "ExperimentSpec":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise SpecError(f"unsupported schema_version {d.get('schema_version')!r}")
        try:
            dataset = d["dataset"]
            algos = [AlgorithmSpec.from_obj(a) for a in d["algorithms"]]
            values = [int(v) for v in d["sweep"]["values"]]
        except (KeyError, TypeError) as exc:
            raise SpecError(f"missing or malformed field: {exc}") from exc
        if "path" not in dataset and dataset.get("generator") not in GENERATORS:
            raise SpecError("dataset needs a 'path' or a known 'generator'")
        out = d.get("outputs", {})
        return cls(
            dataset=dataset,
            algorithms=algos,
            sweep_values=values,
            trials=int(d.get("trials", 1)),
            seed=int(d.get("seed", 0)),
            opt=bool(d.get("opt", True)),
            certify=bool(d.get("certify", True)),
            timing=bool(d.get("timing", True)),
            results=out.get("results", "results.csv"),
            certs=out.get("certs", "certs.json"),
            base_dir=Path(base_dir) if base_dir is not None else Path.cwd(),
        )

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        path = Path(path)
        if not path.exists():
            raise DataError(f"spec {path} not found")
        try:
            d = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: {exc}") from exc
        return cls.from_dict(d, base_dir=path.parent)

    def load_dataset(self, trial: int):
        if "path" in self.dataset:
            path = Path(self.dataset["path"])
            if not path.is_absolute():
                path = self.base_dir / path
            return load_dataset(path)
        params = dict(self.dataset.get("params", {}))
        params["seed"] = int(params.get("seed", self.seed)) + trial
        return GENERATORS[self.dataset["generator"]](**params)


@dataclass
class Row:
    dataset_id: str
    sweep_value: int
    trial: int
    algorithm: str
    variant: str
    q: int | str
    final_value: float
    opt_value: float | None
    ratio: float | None
    iterations: int
    f_calls: int
    grad_calls: int
    wall_ms: float
    stop_reason: str

    def as_list(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in CSV_COLUMNS]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _constants_for(ds, sys: IndependenceSystem, cache: dict) -> RestrictedConstants | None:
    """Exact constants for regression (only the sizes the guarantees use),
    the closed-form smoothness bound for Ising."""
    obj = ds.objective()
    if ds.kind == "ising":
        return compute_restricted_constants(obj, 1, mode="bound")
    if obj.n > OPT_MAX_N:
        return None
    s = sys.rank
    sizes = {1, min(2, obj.n), s, min(2 * s, obj.n)}
    missing = sorted(k for k in sizes if k not in cache)
    if missing:
        got = compute_restricted_constants(obj, s, sizes=missing)
        for k in missing:
            cache[k] = (got.m_by_size[k], got.M_by_size[k])
    out = RestrictedConstants(obj.n, provenance="exact")
    for k, (m, M) in cache.items():
        out.m_by_size[k] = m
        out.M_by_size[k] = M
    return out


def _run_one(algo: AlgorithmSpec, oracle, sys, constants, seed: int, default_init: str):
    if algo.id in LOCAL_SEARCH:
        M = constants.M_bound if constants is not None and constants.M_bound else None
        cfg = RunConfig(
            variant=algo.id,
            T=algo.T,
            q=algo.q,
            seed=None,
            record_trajectory=False,
            init=algo.init or default_init,
            M=M,
        )
        return local_search(oracle, sys, cfg, constants)
    if algo.id == "geometric":
        cfg = RunConfig(variant="oblivious", T=algo.T, epsilon=algo.epsilon, record_trajectory=False)
        return geometric_local_search(oracle, sys, cfg, constants)
    if algo.id == "greedy":
        return greedy(oracle, sys)
    if algo.id == "modular":
        return modular_approximation(oracle, sys, algo.q)
    return random_baseline(oracle, sys, seed)


def _task(spec: ExperimentSpec, sweep_idx: int, value: int, trial: int, datasets: dict):
    ds = datasets[trial]
    sys = ds.constraint(value)
    obj = ds.objective()
    cache = {}
    constants = _constants_for(ds, sys, cache)
    opt = None
    if spec.opt and sys.n <= OPT_MAX_N:
        opt = brute_force_opt(SetOracle(obj), sys)[1]
    default_init = "empty" if ds.kind == "ising" else "maximal"
    rows, certs = [], []
    for algo in spec.algorithms:
        oracle = SetOracle(obj)
        seed = int(np.random.SeedSequence([spec.seed, trial, sweep_idx]).generate_state(1)[0])
        report = _run_one(algo, oracle, sys, constants, seed, default_init)
        ratio = report.final_value / opt if opt else None
        rows.append(
            Row(
                dataset_id=ds.dataset_id,
                sweep_value=value,
                trial=trial,
                algorithm=algo.id,
                variant=report.variant or "",
                q=algo.q if algo.id in LOCAL_SEARCH | {"modular"} else "",
                final_value=report.final_value,
                opt_value=opt,
                ratio=ratio,
                iterations=report.iterations_used,
                f_calls=report.f_calls,
                grad_calls=report.grad_calls,
                wall_ms=round(report.wall_time * 1e3, 3) if spec.timing else 0.0,
                stop_reason=report.stop_reason,
            )
        )
        if spec.certify:
            cert = certify_run(report, oracle, sys, constants, opt_value=opt) if opt is not None else (
                {"status": "unverifiable", "reason": "no OPT"}
            )
            cert = {
                "dataset_id": ds.dataset_id,
                "sweep_value": value,
                "trial": trial,
                "algorithm": algo.id,
                "final_set": list(report.final_set),
                **{k: v for k, v in cert.items() if not _bad_float(v)},
            }
            certs.append(cert)
    return rows, certs


def _bad_float(v) -> bool:
    return isinstance(v, float) and not math.isfinite(v)


@dataclass
class ExperimentResult:
    rows: list[Row]
    certs: list[dict]

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.as_list())
        return buf.getvalue()

    def certs_text(self) -> str:
        return json.dumps({"schema_version": SCHEMA_VERSION, "certificates": self.certs},
                          indent=1, sort_keys=True) + "\n"

    @property
    def failed_certificates(self) -> list[dict]:
        return [c for c in self.certs if c.get("status") == "fail"]


def run_experiment(spec: ExperimentSpec, out_dir=None, threads: int = 1) -> ExperimentResult:
    """Run every sweep point x trial x algorithm; write results if ``out_dir``.

    Tasks may run on a thread pool but results are assembled in sweep/trial
    order and written by this function alone.
    """
    datasets = {t: spec.load_dataset(t) for t in range(spec.trials)}
    tasks = [(i, v, t) for i, v in enumerate(spec.sweep_values) for t in range(spec.trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(lambda a: _task(spec, *a, datasets), tasks))
    else:
        outs = [_task(spec, *a, datasets) for a in tasks]
    result = ExperimentResult([r for rows, _ in outs for r in rows], [c for _, cs in outs for c in cs])
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / spec.results).write_text(result.csv_text())
        (out_dir / spec.certs).write_text(result.certs_text())
    return result


def desk_spec(kind: str, trials: int = 10, seed: int = 0, **overrides) -> ExperimentSpec:
    """The reduced-scale regression or Ising sweep with all six algorithms."""
    algos = ["oblivious", "semi-oblivious", "non-oblivious", "greedy", "modular", "random"]
    if kind == "regression":
        d = {
            "dataset": {"generator": "regression",
                        "params": {"n_samples": 50, "n_features": 20, "n_parts": 4,
                                   "per_part_truth": 2, "noise_sd": 0.2}},
            "sweep": {"variable": "capacity", "values": [1, 2, 3, 4]},
        }
    elif kind == "ising":
        d = {
            "dataset": {"generator": "ising",
                        "params": {"n_vertices": 6, "degree": 3, "n_samples": 100,
                                   "burn_in": 200, "thin": 10}},
            "sweep": {"variable": "b", "values": [1, 2, 3]},
            "opt": False,
        }
    else:
        raise SpecError(f"unknown desk experiment {kind!r}")
    d.update(schema_version=SCHEMA_VERSION, algorithms=algos, trials=trials, seed=seed)
    d.update(overrides)
    return ExperimentSpec.from_dict(d)
