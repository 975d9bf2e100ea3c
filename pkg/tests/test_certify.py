import math

import numpy as np
import pytest

from localsearch.certify import (
    certify_run,
    check_lemma_inequalities,
    check_localizability_general,
    check_localizability_simplified,
)
from localsearch.constraints import BMatching, UniformMatroid
from localsearch.corpus import build_corpus, orthogonal_instance
from localsearch.objectives import QuadraticR2, RestrictedConstants, SetOracle, compute_restricted_constants
from localsearch.search import RunConfig, RunReport, geometric_local_search, local_search

from conftest import r1_design


@pytest.fixture
def r1_constants():
    return compute_restricted_constants(QuadraticR2(*r1_design()), 2, (1, 2))


class TestSimplified:
    def test_r1_tight(self, r1):
        rep = check_localizability_simplified(r1, 1, 1.0, 1.0)
        assert rep.passed
        assert rep.worst_slack == pytest.approx(0.0, abs=1e-12)

    def test_same_sets_trivial(self, r1):
        # alpha <= beta makes X = X* harmless; a large alpha must fail somewhere
        assert not check_localizability_simplified(r1, 1, 3.0, 1.0).passed

    def test_monotone_in_alpha(self):
        inst = build_corpus()[3]
        c = inst.constants()
        s = inst.system.rank
        a = c.m(2 * s) / c.M(s, 2)
        for alpha in (a, a / 2, 0.0):
            assert check_localizability_simplified(inst.oracle(), s, alpha, 1 / a).passed

    def test_n_limit(self):
        with pytest.raises(ValueError):
            check_localizability_simplified(SetOracle(QuadraticR2(np.eye(9), np.ones(9))), 1, 1, 1)


class TestGeneral:
    def test_reduces_to_simplified_on_r1(self, r1):
        rep = check_localizability_general(r1, 1, 2, 1.0, 1.0, 0.0)
        assert rep.passed

    def test_linear_passes_with_1_1_0(self):
        inst = orthogonal_instance(5)
        rep = check_localizability_general(inst.oracle(), 3, 3, 1.0, 1.0, 0.0)
        assert rep.passed

    def test_literal_reading_breaks_linear_case(self):
        inst = orthogonal_instance(5)
        rep = check_localizability_general(inst.oracle(), 3, 3, 1.0, 1.0, 0.0, ell_at_least_k=False)
        assert not rep.passed
        assert rep.witness["k"] > rep.witness["l"]

    def test_quadratic_with_exact_constants(self):
        inst = next(i for i in build_corpus() if i.name == "bmatching-k4-b1")
        c = inst.constants()
        s = inst.system.rank
        a = c.m(2 * s) / c.M(s, 3)
        assert check_localizability_general(inst.oracle(), s, 3, a, 1 / a, 0.0).passed

    def test_guards(self, r1):
        with pytest.raises(ValueError):
            check_localizability_general(r1, 4, 2, 1, 1, 0)


class TestLemmas:
    def test_r1(self, r1, r1_constants):
        rep = check_lemma_inequalities(r1, r1_constants, UniformMatroid(2, 1))
        assert rep.passed
        # all three are tight on R1
        assert rep.concavity_slack == pytest.approx(0.0, abs=1e-12)
        assert rep.singleton_slack == pytest.approx(0.0, abs=1e-12)
        assert rep.smoothness_slack == pytest.approx(0.0, abs=1e-12)

    def test_concavity_at_empty(self, r1):
        g = r1.gradient(np.zeros(2))
        np.testing.assert_allclose(g, [0.24, 0.32])
        assert (g @ g) / (2 * 0.08) == pytest.approx(1.0)

    def test_detects_wrong_constants(self, r1):
        bad = RestrictedConstants(2, {1: 0.08, 2: 0.08}, {1: 0.01, 2: 0.01})
        assert not check_lemma_inequalities(r1, bad).passed


class TestCertifyRun:
    def test_r1_non_oblivious(self, r1, r1_constants):
        sys = UniformMatroid(2, 1)
        rep = local_search(r1, sys, RunConfig(variant="non-oblivious"), r1_constants)
        cert = certify_run(rep, r1, sys, r1_constants)
        assert cert["theorem"] == "matroid-local-optimum"
        assert cert["bound"] == pytest.approx(1.0)
        assert cert["achieved_ratio"] == pytest.approx(1.0)
        assert cert["status"] == "pass"

    def test_budget_form(self, r2):
        sys = UniformMatroid(3, 1)
        c = compute_restricted_constants(r2.objective, 3, (1, 2, 3))
        rep = local_search(r2, sys, RunConfig(T=1), c)
        cert = certify_run(rep, r2, sys, c)
        assert cert["theorem"] == "matroid-budget"
        m, M = c.m(2), c.M(1, 2)
        expected = (m / M) ** 2 * (1 - math.exp(-M * 1 / (1 * m))) if m > 0 else 0.0
        assert cert["bound"] == pytest.approx(expected)

    def test_geometric_checks_cap(self):
        inst = next(i for i in build_corpus() if i.name == "uniform-n6-s2")
        c = inst.constants()
        rep = geometric_local_search(inst.oracle(), inst.system, RunConfig(epsilon=0.1), c)
        cert = certify_run(rep, inst.oracle(), inst.system, c)
        assert cert["theorem"] == "geometric"
        assert cert["iterations_within_cap"] is True
        assert cert["status"] == "pass"

    def test_missing_constants(self, r1):
        rep = local_search(r1, UniformMatroid(2, 1), RunConfig())
        assert certify_run(rep, r1, UniformMatroid(2, 1), None)["status"] == "unverifiable"
        empty = RestrictedConstants(2, provenance="upper-bound", M_bound=1.0)
        assert certify_run(rep, r1, UniformMatroid(2, 1), empty)["status"] == "unverifiable"

    def test_detects_false_claim(self, r1, r1_constants):
        sys = UniformMatroid(2, 1)
        fake = RunReport("matroid-local-search", "oblivious", (0,), 0.36, 0, "local-optimum",
                         params={"rank": 1})
        cert = certify_run(fake, r1, sys, r1_constants)
        assert cert["status"] == "fail"

    def test_no_guarantee_for_greedy(self, r1, r1_constants):
        from localsearch.baselines import greedy

        rep = greedy(r1, UniformMatroid(2, 1))
        assert certify_run(rep, r1, UniformMatroid(2, 1), r1_constants)["status"] == "no-guarantee"

    def test_p_system_bound(self):
        inst = next(i for i in build_corpus() if i.name == "bmatching-k4-b1")
        c = inst.constants()
        rep = local_search(inst.oracle(), inst.system, RunConfig(q=1), c)
        cert = certify_run(rep, inst.oracle(), inst.system, c)
        s = inst.system.rank
        assert cert["t"] == 3
        assert cert["bound"] == pytest.approx((c.m(2 * s) / c.M(s, 3)) ** 2 / (2 - 1 + 1))
        assert cert["status"] == "pass"
