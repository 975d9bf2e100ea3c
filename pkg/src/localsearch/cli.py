"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 certificate failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .baselines import brute_force_opt
from .certify import TOL, certify_run
from .constraints import ConfigurationError, system_from_dict
from .datasets import DataError, gen_ising, gen_regression, load_dataset, save_dataset
from .experiments import ExperimentSpec, SpecError, run_experiment
from .objectives import SetOracle, compute_restricted_constants
from .search import RunConfig, RunReport, geometric_local_search, local_search

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CERT = 0, 1, 2, 3
SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # no prefix matching: --t must not be read as --tol or --threads
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise UsageError(message)


def _common(suppress: bool = False) -> argparse.ArgumentParser:
    # subcommands repeat the global flags without defaults, so a value given
    # before the subcommand is not overwritten
    def d(v):
        return argparse.SUPPRESS if suppress else v

    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--out", default=d(None), help="output file or directory")
    p.add_argument("--tol", type=float, default=d(TOL))
    p.add_argument("--threads", type=int, default=d(1))
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    parser = _Parser(prog="localsearch", description=__doc__.splitlines()[0], parents=[_common()])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen-regression", parents=[common], help="emit a regression dataset")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--features", type=int, default=20)
    p.add_argument("--parts", type=int, default=4)
    p.add_argument("--truth-per-part", type=int, default=2)
    p.add_argument("--noise", type=float, default=0.2)

    p = sub.add_parser("gen-ising", parents=[common], help="emit an Ising dataset")
    p.add_argument("--vertices", type=int, default=6)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--thin", type=int, default=10)

    p = sub.add_parser("run", parents=[common], help="run an experiment spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--no-timing", action="store_true", help="write wall_ms as 0")

    p = sub.add_parser("search", parents=[common], help="one local-search run on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--bound", type=int, default=None, help="capacity per part or degree bound")
    p.add_argument("--variant", default="oblivious")
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--T", type=int, default=1000)
    p.add_argument("--epsilon", type=float, default=None, help="run the geometric variant")
    p.add_argument("--init", choices=["maximal", "empty"], default=None)

    p = sub.add_parser("certify", parents=[common], help="certify a run against its guarantee")
    p.add_argument("--run", required=True, help="output of the search subcommand")
    p.add_argument("--dataset", required=True)

    p = sub.add_parser("bruteforce", parents=[common], help="exact OPT by enumeration")
    p.add_argument("--dataset", required=True)
    p.add_argument("--bound", type=int, default=None)

    p = sub.add_parser("constants", parents=[common], help="restricted constants report")
    p.add_argument("--dataset", required=True)
    p.add_argument("--s-max", type=int, default=None)
    p.add_argument("--t", type=int, nargs="+", default=[1, 2])
    p.add_argument("--mode", choices=["exact", "sampled", "bound"], default=None)
    p.add_argument("--samples", type=int, default=2000)
    return parser


def _emit(obj: dict, out) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _cmd_gen_regression(a) -> int:
    ds = gen_regression(a.samples, a.features, a.parts, a.truth_per_part, a.noise, a.seed)
    return _save(ds, a.out)


def _cmd_gen_ising(a) -> int:
    ds = gen_ising(a.vertices, a.degree, a.samples, a.burn_in, a.thin, a.seed)
    return _save(ds, a.out)


def _save(ds, out) -> int:
    if out is None:
        _emit(ds.to_dict(), None)
    else:
        save_dataset(ds, out)
    return EXIT_OK


def _cmd_run(a) -> int:
    spec = ExperimentSpec.load(a.spec)
    if a.no_timing:
        spec.timing = False
    result = run_experiment(spec, a.out or "results", threads=a.threads)
    failed = result.failed_certificates
    print(f"{len(result.rows)} rows, {len(result.certs)} certificates, {len(failed)} failed")
    return EXIT_CERT if failed else EXIT_OK


def _cmd_search(a) -> int:
    ds = load_dataset(a.dataset)
    system = ds.constraint(a.bound)
    oracle = SetOracle(ds.objective())
    constants = _constants(ds, system)
    init = a.init or ("empty" if ds.kind == "ising" else "maximal")
    cfg = RunConfig(
        variant=a.variant,
        T=a.T,
        q=a.q,
        epsilon=a.epsilon,
        init=init,
        M=constants.M_bound if constants.M_bound else None,
    )
    if a.epsilon is not None:
        report = geometric_local_search(oracle, system, cfg, constants)
    else:
        report = local_search(oracle, system, cfg, constants)
    _emit(
        {
            "schema_version": SCHEMA_VERSION,
            "dataset_id": ds.dataset_id,
            "constraint": system.describe(),
            "run": report.to_dict(),
        },
        a.out,
    )
    return EXIT_OK


def _constants(ds, system):
    obj = ds.objective()
    if ds.kind == "ising":
        return compute_restricted_constants(obj, 1, mode="bound")
    s = system.rank
    sizes = {1, min(2, obj.n), s, min(2 * s, obj.n)}
    return compute_restricted_constants(obj, s, (1, 2, s), sizes=sizes)


def _report_from_dict(d: dict) -> RunReport:
    try:
        return RunReport(
            algorithm=d["algorithm"],
            variant=d.get("variant"),
            final_set=tuple(d["final_set"]),
            final_value=float(d["final_value"]),
            iterations_used=int(d["iterations_used"]),
            stop_reason=d["stop_reason"],
            params=d.get("params", {}),
        )
    except KeyError as exc:
        raise DataError(f"run output lacks {exc}") from exc


def _cmd_certify(a) -> int:
    path = Path(a.run)
    if not path.exists():
        raise DataError(f"run output {path} not found")
    try:
        blob = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: {exc}") from exc
    ds = load_dataset(a.dataset)
    system = system_from_dict(blob["constraint"])
    report = _report_from_dict(blob["run"])
    oracle = SetOracle(ds.objective())
    recomputed = oracle.value(report.final_set)
    cert = certify_run(report, oracle, system, _constants(ds, system), tol=a.tol)
    cert["recomputed_value"] = recomputed
    if abs(recomputed - report.final_value) > a.tol * max(1.0, abs(recomputed)):
        cert["status"] = "fail"
        cert["reason"] = "reported value does not match f(final_set)"
    _emit(cert, a.out)
    return EXIT_CERT if cert["status"] == "fail" else EXIT_OK


def _cmd_bruteforce(a) -> int:
    ds = load_dataset(a.dataset)
    system = ds.constraint(a.bound)
    X, v = brute_force_opt(SetOracle(ds.objective()), system)
    _emit({"dataset_id": ds.dataset_id, "constraint": system.describe(),
           "opt_set": list(X), "opt_value": v}, a.out)
    return EXIT_OK


def _cmd_constants(a) -> int:
    ds = load_dataset(a.dataset)
    obj = ds.objective()
    mode = a.mode or ("bound" if ds.kind == "ising" else "exact")
    s_max = a.s_max or ds.constraint().rank
    c = compute_restricted_constants(obj, s_max, a.t, mode, n_samples=a.samples, seed=a.seed)
    _emit({"dataset_id": ds.dataset_id, **c.to_dict(s_max, a.t)}, a.out)
    return EXIT_OK


COMMANDS = {
    "gen-regression": _cmd_gen_regression,
    "gen-ising": _cmd_gen_ising,
    "run": _cmd_run,
    "search": _cmd_search,
    "certify": _cmd_certify,
    "bruteforce": _cmd_bruteforce,
    "constants": _cmd_constants,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
