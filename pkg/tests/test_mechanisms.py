import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pevmech.mechanisms import (
    Mechanism,
    check_mechanism_mode,
    expected_outcome,
    expected_payment,
    expected_utility,
    groves_payment,
    interim_outcome,
    pev_h,
    pev_interim_utilities,
    pev_payment_breakdown,
    pev_payment_realized,
    pivot_h,
    worst_trust_detail,
    worst_trust_h,
)
from pevmech.model import AgentType, Allocation, Scenario, ScenarioError, TypeReportProfile, validate_scenario
from pevmech.scenarios import MULTILINEAR, TRUST_MULTILINEAR, bundled, poly
from pevmech.welfare import efficient_allocation, expected_social_welfare, true_success_vector


def single_agent():
    return validate_scenario(
        Scenario((0,), (Allocation.build("a", 1, {0: ["x"]}),), {0: AgentType({"a": poly((1.0, 0))}, pos={"a": 0.7})})
    )


def test_mechanism_parse():
    assert Mechanism.parse("groves_zero") is Mechanism.GROVES_ZERO
    assert Mechanism.parse("PEV-Trust") is Mechanism.PEV_TRUST
    with pytest.raises(ValueError, match="unknown mechanism"):
        Mechanism.parse("vcg")


def test_mechanism_mode_mismatch():
    with pytest.raises(ScenarioError):
        check_mechanism_mode(bundled("trust_weighted"), "pev")
    with pytest.raises(ScenarioError):
        check_mechanism_mode(bundled("table1"), "pev-trust")


def test_groves_zero_table1():
    s = bundled("table1")
    truth = s.truthful_reports()
    assert groves_payment(s, truth, "zero")[0] == -0.5
    lie = truth.replace(0, truth[0].with_pos("tau", 0.6))
    assert groves_payment(s, lie, "zero")[0] == pytest.approx(-0.6)
    assert expected_utility(s, s.true_types[0], lie, "groves-zero", 0) == pytest.approx(0.6)
    assert expected_utility(s, s.true_types[0], truth, "groves-zero", 0) == 0.5


def test_groves_clarke_single_agent_is_zero():
    s = single_agent()
    assert groves_payment(s, s.truthful_reports(), "clarke") == {0: 0.0}
    with pytest.raises(ValueError):
        groves_payment(s, s.truthful_reports(), "other")


def test_pev_h_table1():
    s = bundled("table1")
    truth = s.truthful_reports()
    assert pev_h(s, truth, 1) == 0.0
    assert pev_h(s, truth, 0) == 0.5
    assert pev_h(single_agent(), single_agent().truthful_reports(), 0) == 0.0
    with pytest.raises(ScenarioError):
        pev_h(bundled("trust_weighted"), bundled("trust_weighted").truthful_reports(), 0)


def test_pev_breakdown_table1():
    s = bundled("table1")
    truth = s.truthful_reports()
    b = pev_payment_breakdown(s, truth, 1)
    assert b.allocation == "tau_prime"
    assert (b.v_minus_i_success, b.v_minus_i_failure) == (0.0, 0.0)
    assert b.payment_if_success == b.payment_if_failure == 0.0
    assert pev_interim_utilities(s, s.true_types[1], truth, 1) == (1.0, 0.0)
    assert expected_utility(s, s.true_types[1], truth, "pev", 1) == 0.5
    # agent 0 has no task under tau_prime: same payment either way
    b0 = pev_payment_breakdown(s, truth, 0)
    assert b0.payment_if_success == b0.payment_if_failure


def test_pev_misreport_table1_unprofitable():
    s = bundled("table1")
    truth = s.truthful_reports()
    lie = truth.replace(0, truth[0].with_pos("tau", 0.6))
    b = pev_payment_breakdown(s, lie, 0)
    assert b.allocation == "tau"
    assert (b.h_i, b.v_minus_i_success, b.v_minus_i_failure) == (0.5, 1.0, 0.0)
    assert expected_utility(s, s.true_types[0], lie, "pev", 0) == pytest.approx(-0.5)
    # truthful utility: SW - h = 0.5 - 0.5
    assert expected_utility(s, s.true_types[0], truth, "pev", 0) == 0.0


def test_pev_realized_table1():
    s = bundled("table1")
    truth = s.truthful_reports()
    assert pev_payment_realized(s, truth, {0: True, 1: True}) == {0: -0.5, 1: 0.0}
    assert pev_payment_realized(s, truth, (True, False)) == {0: 0.5, 1: 0.0}
    with pytest.raises(ScenarioError):
        pev_payment_realized(s, truth, (True,))


def realized_average(s, reports, i):
    # weight realised x_i over every outcome of the others at true PoS, with i's own outcome drawn too
    chosen, _ = efficient_allocation(s, reports)
    p = true_success_vector(s, chosen)
    total = 0.0
    for bits in itertools.product((False, True), repeat=s.n):
        w = np.prod([p[j] if b else 1 - p[j] for j, b in enumerate(bits)])
        if w:
            total += w * pev_payment_realized(s, reports, bits)[i]
    return total


@pytest.mark.parametrize("name", MULTILINEAR)
def test_realized_payments_average_to_expected(name):
    s = bundled(name)
    truth = s.truthful_reports()
    for i in s.agents:
        assert realized_average(s, truth, i) == pytest.approx(expected_payment(s, truth, "pev", i), abs=1e-9)


@pytest.mark.parametrize("name", MULTILINEAR)
def test_welfare_identity(name):
    s = bundled(name)
    truth = s.truthful_reports()
    chosen, ledger = efficient_allocation(s, truth)
    for i in s.agents:
        u = expected_utility(s, s.true_types[i], truth, "pev", i)
        assert u + pev_h(s, truth, i) == pytest.approx(ledger.max_welfare, abs=1e-9)


def test_constant_valuations_realized_equals_expected():
    allocs = (Allocation.build("a", 2, {0: ["x"], 1: ["y"]}),)
    types = {0: AgentType({"a": poly((0.3,))}, pos={"a": 0.4}), 1: AgentType({"a": poly((0.2,))}, pos={"a": 0.9})}
    s = validate_scenario(Scenario((0, 1), allocs, types))
    truth = s.truthful_reports()
    for bits in itertools.product((False, True), repeat=2):
        got = pev_payment_realized(s, truth, bits)
        for i in s.agents:
            assert got[i] == pytest.approx(expected_payment(s, truth, "pev", i))


def test_expected_and_interim_outcomes():
    s = bundled("table1")
    truth = s.truthful_reports()
    out = expected_outcome(s, truth, "pev")
    assert out.chosen == "tau_prime" and out.mode == "expected"
    assert out.utilities == {0: 0.0, 1: 0.5}
    inter = interim_outcome(s, truth, "pev", {0: True, 1: True})
    assert inter.utilities[1] == 1.0 and inter.mode == "interim"
    inter = interim_outcome(s, truth, "pev", {0: True, 1: False})
    assert inter.utilities[1] == 0.0


def test_worst_trust_ignores_unused_opinions():
    # f_j = p_{j,j}: i's opinions never matter, so the pivot is the plain one
    s = bundled("trust_self")
    truth = s.truthful_reports()
    h, alloc, row = worst_trust_detail(s, truth, 0)
    assert alloc == "direct" and h == pytest.approx(0.6) and row == (0.0, 0.0, 0.0)


def test_worst_trust_mean_minimised_at_zero_opinions():
    s = bundled("trust_weighted")
    truth = s.truthful_reports()
    h, alloc, row = worst_trust_detail(s, truth, 0, "vertex")
    assert row == (0.0, 0.0)
    # without agent 0 only tau_prime: 0.5 * (0.4 * 0.7)
    assert h == pytest.approx(0.5 * 0.4 * 0.7)


@pytest.mark.parametrize("name", TRUST_MULTILINEAR)
def test_worst_trust_vertex_matches_grid(name):
    s = bundled(name)
    truth = s.truthful_reports()
    for i in s.agents:
        assert worst_trust_h(s, truth, i, "vertex") == pytest.approx(worst_trust_h(s, truth, i, "grid"), abs=1e-9)


def test_worst_trust_separable_minmax_matches_joint_search():
    # min over i's whole opinion block c of max_tau W_tau(c), brute force on the grid
    s = bundled("trust_mixed")
    truth = s.truthful_reports()
    grid = np.round(np.arange(0, 1.01, 0.25), 10)
    for i in s.agents:
        others = TypeReportProfile({j: t for j, t in truth.reports.items() if j != i})
        feasible = [a.id for a in s.allocations if all(j in others for j in s.agents if a.assigns(j))]
        best = None
        for combo in itertools.product(grid, repeat=len(feasible) * s.n):
            rows = {a: combo[k * s.n:(k + 1) * s.n] for k, a in enumerate(feasible)}
            w = max(expected_social_welfare(s, others, a, fill={i: rows[a]}) for a in feasible)
            best = w if best is None else min(best, w)
            if len(feasible) * s.n > 6:
                break
        if len(feasible) * s.n <= 6:
            assert worst_trust_h(s, truth, i) == pytest.approx(best, abs=1e-9)


def rho_formula_utility(s, true_type, reports, i):
    # expected utility with v evaluated at aggregated true rho, PEV coordinate split on rho_i
    chosen, _ = efficient_allocation(s, reports)
    types = {**s.true_types, i: true_type}
    world = validate_scenario(Scenario(s.agents, s.allocations, types, s.mode, s.aggregation))
    rho = true_success_vector(world, chosen)
    h = worst_trust_h(s, reports, i)
    total = 0.0
    for b in (0.0, 1.0):
        q = list(rho)
        q[i] = b
        w = rho[i] if b else 1 - rho[i]
        sw = true_type.valuations[chosen](q) + sum(reports[j].valuations[chosen](q) for j in reports.agents if j != i)
        total += w * (sw - h)
    return total


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from(["trust_weighted", "trust_product", "trust_self"]))
def test_opinion_level_utility_matches_rho_formula_when_multilinear(x, y, name):
    s = bundled(name)
    t = s.true_types[0].with_opinion("tau" if "tau" in s.allocation_ids else "relay", 0, x)
    s = validate_scenario(s.with_true_type(0, t))
    truth = s.truthful_reports()
    lie = truth.replace(0, t.with_opinion(s.allocation_ids[0], 1, y))
    for reports in (truth, lie):
        got = expected_utility(s, s.true_types[0], reports, "pev-trust", 0)
        assert got == pytest.approx(rho_formula_utility(s, s.true_types[0], reports, 0), abs=1e-9)


def test_clarke_pivot_by_mode():
    s = bundled("trust_weighted")
    truth = s.truthful_reports()
    assert pivot_h(s, truth, 0) == worst_trust_h(s, truth, 0)
    s = bundled("table1")
    assert pivot_h(s, s.truthful_reports(), 0) == 0.5
