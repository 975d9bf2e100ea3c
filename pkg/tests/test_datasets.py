import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localsearch.datasets import (
    DataError,
    dataset_from_dict,
    gen_ising,
    gen_regression,
    load_dataset,
    magnetization_autocorrelation,
    random_regular_graph,
    save_dataset,
)


class TestRegression:
    def test_desk_shape(self):
        ds = gen_regression(50, 20, 4, 2, 0.2, seed=1)
        assert ds.A.shape == (50, 20) and ds.y.shape == (50,)
        assert ds.partition == [j // 5 for j in range(20)]
        assert ds.constraint().rank == 8
        assert ds.constraint(3).rank == 12

    def test_paper_shape(self):
        ds = gen_regression(200, 50, 5, 5, 0.2, seed=0)
        assert ds.A.shape == (200, 50) and len(ds.true_support) == 25

    def test_standardised(self):
        A = gen_regression(seed=3).A
        assert np.all(np.abs(A.mean(axis=0)) < 1e-10)
        assert np.all(np.abs(A.std(axis=0) - 1) < 1e-10)

    def test_truth_per_part(self):
        ds = gen_regression(seed=4)
        parts = np.array(ds.partition)[ds.true_support]
        assert np.bincount(parts).tolist() == [2, 2, 2, 2]

    def test_deterministic(self):
        a, b = gen_regression(seed=5), gen_regression(seed=5)
        assert np.array_equal(a.A, b.A) and np.array_equal(a.y, b.y)
        assert not np.array_equal(a.y, gen_regression(seed=6).y)

    def test_divisibility(self):
        with pytest.raises(DataError):
            gen_regression(n_features=21, n_parts=4)


class TestIsing:
    def test_spins_and_graph(self):
        ds = gen_ising(6, 3, 50, 20, 2, seed=0)
        assert ds.samples.shape == (50, 6)
        assert set(np.unique(ds.samples)) <= {-1, 1}
        deg = np.zeros(6, int)
        for u, v in ds.true_edges:
            deg[u] += 1
            deg[v] += 1
        assert np.all(deg == 3)
        assert set(ds.true_weights) <= {-0.5, 0.5}
        assert ds.n == 15

    def test_paper_shape(self):
        ds = gen_ising(10, 5, 100, 5, 1, seed=0)
        assert ds.samples.shape == (100, 10) and len(ds.true_edges) == 25

    def test_errors(self):
        rng = np.random.default_rng(0)
        with pytest.raises(DataError):
            random_regular_graph(4, 4, rng)
        with pytest.raises(DataError):
            random_regular_graph(5, 3, rng)

    def test_autocorrelation_long_chain(self):
        # 100 samples give a noisy estimate, so the mixing check uses a long chain
        ds = gen_ising(6, 3, 2000, 200, 10, seed=0)
        assert abs(magnetization_autocorrelation(ds.samples)) < 0.1


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 10), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_regular_graph_property(V, d, seed):
    if V * d % 2 or d >= V:
        return
    edges = random_regular_graph(V, d, np.random.default_rng(seed))
    assert len(set(edges)) == len(edges) == V * d // 2
    assert all(u != v for u, v in edges)
    assert np.all(np.bincount(np.ravel(edges), minlength=V) == d)


class TestPersistence:
    @pytest.mark.parametrize("ds", [gen_regression(20, 8, 2, 1, seed=0), gen_ising(4, 1, 10, 2, 1, seed=0)])
    def test_round_trip(self, ds, tmp_path):
        save_dataset(ds, tmp_path / "d.json")
        back = load_dataset(tmp_path / "d.json")
        assert back.to_dict() == ds.to_dict()

    def test_schema_version(self):
        d = gen_regression(20, 8, 2, 1, seed=0).to_dict()
        d["schema_version"] = 99
        with pytest.raises(DataError):
            dataset_from_dict(d)

    def test_bad_kind_and_fields(self):
        d = gen_regression(20, 8, 2, 1, seed=0).to_dict()
        with pytest.raises(DataError):
            dataset_from_dict({**d, "kind": "graph"})
        del d["y"]
        with pytest.raises(DataError):
            dataset_from_dict(d)

    def test_bad_spins(self):
        d = gen_ising(4, 1, 10, 2, 1, seed=0).to_dict()
        d["samples"][0][0] = 0
        with pytest.raises(DataError):
            dataset_from_dict(d)

    def test_missing_and_malformed(self, tmp_path):
        with pytest.raises(DataError):
            load_dataset(tmp_path / "nope.json")
        (tmp_path / "bad.json").write_text("{")
        with pytest.raises(DataError):
            load_dataset(tmp_path / "bad.json")

    def test_json_is_plain(self, tmp_path):
        save_dataset(gen_regression(20, 8, 2, 1, seed=0), tmp_path / "d.json")
        d = json.loads((tmp_path / "d.json").read_text())
        assert d["schema_version"] == 1 and d["kind"] == "regression"
        assert len(d["A"]) == 20 and len(d["A"][0]) == 8
