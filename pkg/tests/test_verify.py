from __future__ import annotations

import json

import numpy as np
import pytest

from pcprmhd.state import admissible_mask, hat_tilde_q, second_form_margin
from pcprmhd.verify import (
    TrialReport,
    check_glf_splitting,
    check_key_inequality,
    check_set_properties,
    counterexample_example_3_1,
    counterexample_lxf,
    lxf_counterexample_limit,
    lxf_counterexample_states,
    property_rng,
    report_json,
    run_suite,
    sample_admissible,
)


def test_trial_report_pass_rule():
    assert TrialReport("a", 10, 0, 0.1, 0).passed
    assert not TrialReport("a", 10, 1, -0.1, 0).passed
    assert TrialReport("a", 100, 5, -0.1, 0, allowed_failure_fraction=0.05).passed
    assert TrialReport("a", 10, 0, 0.1, 0).as_dict()["passed"] is True


@pytest.mark.parametrize("extremity", ["mild", "ultra"])
def test_sample_admissible(extremity):
    U = sample_admissible(7, extremity)
    assert admissible_mask(U)
    np.testing.assert_array_equal(U, sample_admissible(7, extremity))


def test_property_streams_are_independent():
    a = property_rng(0, "convexity").random(4)
    b = property_rng(0, "scaling").random(4)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, property_rng(0, "convexity").random(4))


def test_key_inequality_reduces_to_second_form(rng):
    U = sample_admissible(rng)
    v = np.array([0.3, -0.2, 0.5])
    assert second_form_margin(U, v, np.zeros(3)) > 0


@pytest.mark.parametrize("extremity", ["mild", "ultra"])
def test_key_inequality(extremity):
    rep = check_key_inequality(2000, 3, extremity)
    assert rep.failures == 0 and rep.passed


@pytest.mark.parametrize("dim", ["1D", "2D", "3D", "polygon"])
def test_glf_splitting(dim):
    rep = check_glf_splitting(dim, 200, 5)
    assert rep.trials == 200
    assert rep.failures == 0


def test_glf_rejects_zero_trials():
    with pytest.raises(ValueError):
        check_glf_splitting("2D", 0)


def test_set_properties_small():
    reports = check_set_properties(500, 11)
    failed = [r.name for r in reports if not r.passed]
    assert not failed


def test_lxf_counterexample():
    plus, minus = lxf_counterexample_states(1e-10, 1.0)
    limit = lxf_counterexample_limit(1.0)
    assert limit == pytest.approx(-675 / 64)
    for U in (plus, minus):
        assert not admissible_mask(U)
        assert hat_tilde_q(U)[1] == pytest.approx(limit, abs=1e-4)
    for U in lxf_counterexample_states(1e-10, 1.0, field=0.0):
        assert admissible_mask(U)
    rep = counterexample_lxf()
    assert rep.passed and rep.expectation == "expected-inadmissible"


def test_example_3_1_report():
    rep = counterexample_example_3_1()
    assert rep.passed
    assert rep.detail["q_tilde"]["1e-06"] == pytest.approx(rep.detail["closed_form"], abs=1e-6)


def test_suite_deterministic():
    a = report_json(run_suite(seed=4, trials=100))
    b = report_json(run_suite(seed=4, trials=100))
    assert a == b
    lines = [json.loads(line) for line in a.splitlines()]
    assert {"name", "trials", "failures", "worst_margin", "seed", "passed"} <= set(lines[0])
    assert all(line["passed"] for line in lines)


def test_suite_rejects_zero_trials():
    with pytest.raises(ValueError):
        run_suite(trials=0)
