"""The invariant suites pass on healthy code and catch each seeded fault."""

import numpy as np
import pytest

from col_lab import problems_il as il
from col_lab import problems_synthetic as ps
from col_lab.geometry import DecisionSet, project_point
from col_lab.verification import (
    FAULTS,
    SUITES,
    Check,
    contraction_margin,
    mc_distribution_z,
    projection_gap,
    self_consistent_policy,
    verify,
)

FAULT_HOME = {fault: fault.split(".")[0] for fault in FAULTS}


@pytest.mark.parametrize("name", [n for n in SUITES if n != "harness"])
def test_suite_passes_quick(name):
    checks = SUITES[name](quick=True)
    assert checks
    bad = [c.line() for c in checks if not c.passed]
    assert not bad, bad


@pytest.mark.parametrize("fault", FAULTS)
def test_fault_is_caught_by_its_suite(fault):
    checks = SUITES[FAULT_HOME[fault]](faults=(fault,), quick=True)
    assert any(not c.passed for c in checks)


@pytest.mark.parametrize("fault", FAULTS)
def test_fault_leaves_other_suites_alone(fault):
    # a fault is applied only where it is named, so a neighbouring suite stays green
    other = "geometry" if FAULT_HOME[fault] != "geometry" else "regret"
    assert all(c.passed for c in SUITES[other](faults=(fault,), quick=True))


def test_each_fault_flips_a_specific_check():
    expected = {
        "core.gradient": "gradient_consistency",
        "geometry.projection": "projection_optimality",
        "algorithms.iterates": "ogd_contraction",
        "regret.delta": "thm2_certificate",
        "problems_il.distribution": "monte_carlo_distribution",
    }
    for fault, check_name in expected.items():
        failed = {c.name for c in SUITES[FAULT_HOME[fault]](faults=(fault,), quick=True) if not c.passed}
        assert check_name in failed, (fault, failed)


def test_check_line_format():
    c = Check("geometry", "idempotence", True, 0.0, 1e-12, "exact")
    assert c.line() == "PASS geometry.idempotence  measured=0.000e+00 limit=1.000e-12  (exact)"
    assert Check("x", "y", False, 1.0, 0.0).line().startswith("FAIL x.y")


def test_verify_echoes_one_line_per_check():
    lines = []
    checks = verify("geometry", quick=True, echo=lines.append)
    assert len(lines) == len(checks) + 1
    assert lines[-1].startswith("-- geometry:")


def test_verify_unknown_scope():
    with pytest.raises(KeyError):
        verify("astrology")


def test_projection_gap_detects_a_worse_candidate():
    rng = np.random.default_rng(0)
    for dset in (DecisionSet.box([-1, -1, -1], [1, 1, 1]), DecisionSet.ball(np.zeros(3), 1.0),
                 DecisionSet.simplices(2, 3, 0.05)):
        y = dset.midpoint() + 3.0 * rng.normal(size=dset.dimension)
        p = project_point(dset, y)
        assert projection_gap(dset, y, p, rng) <= 1e-9
        worse = 0.7 * p + 0.3 * dset.midpoint()
        assert projection_gap(dset, y, worse, rng) > 1e-3


def test_projection_gap_degenerate_sets():
    rng = np.random.default_rng(1)
    point = DecisionSet.simplices(1, 2, 0.5)
    y = np.array([3.0, -1.0])
    assert projection_gap(point, y, project_point(point, y), rng) == 0.0
    line = DecisionSet.simplices(1, 2)
    assert projection_gap(line, y, project_point(line, y), rng) <= 1e-9


def test_contraction_margin_and_corruption():
    p = ps.q0()
    margin, eta, rho = contraction_margin(p, np.array([1.0, 1.0]), rounds=200)
    assert margin <= 0
    assert eta == pytest.approx(0.5 / 1.5 ** 2)
    assert 0 < rho < 1
    bumped, _, _ = contraction_margin(p, np.array([1.0, 1.0]), rounds=200, corrupt=lambda xs: xs + 1e-3)
    assert bumped > 0


def test_mc_distribution_z_scale():
    chain = il.chain_instance()
    policy = np.array([0.3, 0.7, 0.6, 0.4])
    rng = np.random.default_rng(5)
    assert mc_distribution_z(chain.mdp, policy, 20_000, rng) < 4.5
    assert mc_distribution_z(chain.mdp, policy, 20_000, rng, shift=np.array([0.02, -0.02])) > 6


def test_self_consistent_policy_on_chain():
    pi, spread, fixed = self_consistent_policy(il.chain_instance())
    assert spread <= 1e-6
    assert fixed <= 1e-8
    assert il.chain_instance().decision_set.contains(pi)
