import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pevmech.model import Allocation, AgentType, PolynomialValuation, Scenario, ScenarioError, restrict_reports, validate_scenario
from pevmech.scenarios import bundled, poly
from pevmech.welfare import (
    aggregate_pos,
    check_multilinear_aggregation,
    check_multilinear_valuation,
    check_scenario_multilinearity,
    efficient_allocation,
    expected_social_welfare,
    is_feasible,
    semantic_multilinearity_gap,
)


def bernoulli_expectation(v, p):
    # sum over s in {0,1}^n of Pr[s|p] v(s)
    total = 0.0
    for s in itertools.product((0.0, 1.0), repeat=len(p)):
        w = np.prod([pj if sj else 1 - pj for sj, pj in zip(s, p)])
        total += w * v(s)
    return total


def test_table1_welfare_values():
    s = bundled("table1")
    truth = s.truthful_reports()
    assert expected_social_welfare(s, truth, "tau") == 0.0
    assert expected_social_welfare(s, truth, "tau_prime") == 0.5
    assert expected_social_welfare(s, truth, "null") == 0.0
    misreport = truth.replace(0, truth[0].with_pos("tau", 0.6))
    assert expected_social_welfare(s, misreport, "tau") == 0.6


def test_table1_efficient_allocation():
    s = bundled("table1")
    truth = s.truthful_reports()
    chosen, ledger = efficient_allocation(s, truth)
    assert chosen == "tau_prime" and ledger.max_welfare == 0.5
    chosen, ledger = efficient_allocation(s, truth.replace(0, truth[0].with_pos("tau", 0.6)))
    assert chosen == "tau" and ledger.max_welfare == 0.6


def test_ties_go_to_first_declared_allocation():
    s = bundled("table1")
    truth = s.truthful_reports()
    chosen, ledger = efficient_allocation(s, truth.replace(0, truth[0].with_pos("tau", 0.5)))
    assert chosen == "tau"
    assert ledger.ties == ("tau", "tau_prime")


def test_all_zero_valuations_pick_first():
    allocs = (Allocation.build("a", 2, {0: ["x"]}), Allocation.build("b", 2, {1: ["y"]}))
    types = {i: AgentType({"a": poly(), "b": poly()}, pos={"a": 0.5, "b": 0.5}) for i in (0, 1)}
    s = validate_scenario(Scenario((0, 1), allocs, types))
    assert efficient_allocation(s, s.truthful_reports())[0] == "a"


def test_feasibility_without_agent():
    s = bundled("table1")
    only0 = restrict_reports(s.truthful_reports(), 1)
    assert not is_feasible(s, only0, "tau") and not is_feasible(s, only0, "tau_prime")
    chosen, ledger = efficient_allocation(s, only0)
    assert chosen == "null" and ledger.max_welfare == 0.0
    assert ledger.infeasible == ("tau", "tau_prime")


def test_aggregate_pos_forms():
    s = bundled("trust_weighted")
    rho = aggregate_pos(s, s.truthful_reports(), "tau")
    # 0.6 * p_{0,i} + 0.4 * p_{1,i}
    assert rho == pytest.approx((0.6 * 0.8 + 0.4 * 0.6, 0.6 * 0.8 + 0.4 * 0.9))
    f = poly((0.5, 0), (0.5, 1))
    assert f((0.4, 0.8)) == pytest.approx(0.6)
    assert poly((1.0, 0, 1))((0.5, 0.5)) == 0.25
    s = bundled("trust_self")
    rho = aggregate_pos(s, s.truthful_reports(), "relay")
    assert rho == (0.9, 0.7, 0.0)


def test_aggregate_pos_needs_trust_mode():
    s = bundled("table1")
    with pytest.raises(ScenarioError):
        aggregate_pos(s, s.truthful_reports(), "tau")


def test_multilinear_checks():
    assert check_multilinear_valuation(poly((1.0, 0, 1))).is_multilinear
    assert check_multilinear_valuation(PolynomialValuation.constant(7.0)).is_multilinear
    r = check_multilinear_valuation(poly((1.0, 0, 0, 1)), 2)
    assert not r.is_multilinear
    w = r.witness
    assert w.variable == 0 and w.point == (0.5, 1.0)
    assert w.lhs == pytest.approx(0.25) and w.rhs == pytest.approx(0.5)
    assert check_multilinear_aggregation(poly((0.3, 0), (0.7, 1))).is_multilinear
    assert check_multilinear_aggregation(poly((1.0, 0, 1, 2))).is_multilinear
    r = check_multilinear_aggregation(poly((1.0, 0, 0)), 2)
    assert not r.is_multilinear
    assert r.witness.point[0] == 0.5 and r.witness.lhs == 0.25 and r.witness.rhs == 0.5


def test_scenario_multilinearity_flags():
    assert check_scenario_multilinearity(bundled("table1")).all_multilinear
    assert not check_scenario_multilinearity(bundled("table1_squared")).all_multilinear
    assert not check_scenario_multilinearity(bundled("trust_squared")).all_multilinear
    assert check_scenario_multilinearity(bundled("trust_product")).all_multilinear


multilinear_terms = st.lists(
    st.tuples(st.floats(-2, 2, allow_nan=False), st.sets(st.integers(0, 5), max_size=4)), min_size=1, max_size=6
)


@settings(max_examples=60, deadline=None)
@given(multilinear_terms, st.lists(st.floats(0, 1), min_size=6, max_size=6))
def test_bernoulli_identity_for_multilinear(terms, p):
    v = PolynomialValuation([(c, {j: 1 for j in ids}) for c, ids in terms])
    assert v.is_multilinear
    assert v(p) == pytest.approx(bernoulli_expectation(v, p), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(multilinear_terms)
def test_syntactic_and_semantic_verdicts_agree_multilinear(terms):
    v = PolynomialValuation([(c, {j: 1 for j in ids}) for c, ids in terms])
    assert semantic_multilinearity_gap(v, 6) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(2, 4), st.floats(0.5, 2))
def test_power_terms_are_detected_semantically(j, power, coeff):
    v = PolynomialValuation([(coeff, {j: power})])
    r = check_multilinear_valuation(v, 4)
    assert not r.is_multilinear and r.witness is not None
    assert abs(r.witness.lhs - r.witness.rhs) > 1e-9
