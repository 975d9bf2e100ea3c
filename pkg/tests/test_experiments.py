import csv
import io
import json

import pytest

from localsearch.datasets import gen_regression, save_dataset
from localsearch.experiments import (
    CSV_COLUMNS,
    AlgorithmSpec,
    ExperimentSpec,
    SpecError,
    desk_spec,
    run_experiment,
)


def rows_of(result):
    return list(csv.DictReader(io.StringIO(result.csv_text())))


@pytest.fixture(scope="module")
def small_regression():
    spec = desk_spec("regression", trials=2, timing=False,
                     sweep={"variable": "capacity", "values": [1, 2]})
    return run_experiment(spec)


class TestSpec:
    def test_aliases(self):
        assert AlgorithmSpec.from_obj("semi").id == "semi-oblivious"
        assert AlgorithmSpec.from_obj({"id": "geometric"}).epsilon == 0.1

    def test_unknown_algorithm(self):
        with pytest.raises(SpecError):
            AlgorithmSpec.from_obj("simulated-annealing")
        with pytest.raises(SpecError):
            AlgorithmSpec.from_obj({"id": "greedy", "temperature": 3})

    def test_schema(self):
        with pytest.raises(SpecError):
            ExperimentSpec.from_dict({"schema_version": 2})
        with pytest.raises(SpecError):
            ExperimentSpec.from_dict({"schema_version": 1, "dataset": {"generator": "x"},
                                      "algorithms": [], "sweep": {"values": [1]}})

    def test_dataset_path_relative_to_spec(self, tmp_path):
        save_dataset(gen_regression(20, 8, 2, 1, seed=0), tmp_path / "d.json")
        spec = {"schema_version": 1, "dataset": {"path": "d.json"},
                "algorithms": ["greedy"], "sweep": {"values": [1]}}
        (tmp_path / "exp.json").write_text(json.dumps(spec))
        s = ExperimentSpec.load(tmp_path / "exp.json")
        assert s.load_dataset(0).n == 8


class TestRun:
    def test_row_accounting(self, small_regression):
        rows = rows_of(small_regression)
        assert list(rows[0]) == CSV_COLUMNS
        assert len(rows) == 2 * 2 * 6
        for v in ("1", "2"):
            for t in ("0", "1"):
                sel = [r for r in rows if r["sweep_value"] == v and r["trial"] == t]
                assert len(sel) == 6

    def test_opt_and_ratio(self, small_regression):
        for r in rows_of(small_regression):
            assert float(r["final_value"]) <= float(r["opt_value"]) + 1e-9
            assert 0 <= float(r["ratio"]) <= 1 + 1e-9
            assert float(r["wall_ms"]) == 0

    def test_certificates_pass(self, small_regression):
        assert small_regression.certs
        assert not small_regression.failed_certificates

    def test_files_written(self, tmp_path):
        spec = desk_spec("regression", trials=1, timing=False, sweep={"values": [1]})
        res = run_experiment(spec, tmp_path / "out")
        assert (tmp_path / "out" / "results.csv").read_text() == res.csv_text()
        assert json.loads((tmp_path / "out" / "certs.json").read_text())["schema_version"] == 1

    def test_threads_identical(self):
        spec = desk_spec("ising", trials=2, timing=False, sweep={"values": [1, 2]})
        a = run_experiment(spec, threads=1)
        b = run_experiment(spec, threads=3)
        assert a.csv_text() == b.csv_text() and a.certs_text() == b.certs_text()

    def test_ising_rows(self):
        spec = desk_spec("ising", trials=1, timing=False, sweep={"values": [1]})
        rows = rows_of(run_experiment(spec))
        assert len(rows) == 6
        assert all(r["opt_value"] == "" for r in rows)

    def test_unknown_desk(self):
        with pytest.raises(SpecError):
            desk_spec("vision")
