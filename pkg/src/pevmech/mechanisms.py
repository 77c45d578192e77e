"""Payment rules and agent utilities.

Four mechanisms share the efficient allocation choice and differ in payments:

* ``groves-zero`` / ``groves-clarke``: ``x_i = h_i - V_{-i}`` computed from
  reports alone, with ``h_i = 0`` or the Clarke pivot.
* ``pev``: post-execution verification.  Agent ``i`` pays
  ``h_i - V^1_{-i}`` if it succeeds and ``h_i - V^0_{-i}`` if it fails, where
  ``V^s_{-i}`` is the others' reported welfare with ``i``'s PoS set to ``s``
  and the others at their true PoS.
* ``pev-trust``: the same rule on aggregated PoS, with the worst-trust pivot.

``h_i`` is computed from the others' reports while ``V^1``/``V^0`` use
true PoS; that asymmetry is intentional.
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import PLAIN, TRUST, AgentType, Scenario, ScenarioError, TypeReportProfile, restrict_reports
from .welfare import (
    aggregate_matrix,
    efficient_allocation,
    expected_social_welfare,
    is_feasible,
    opinion_matrix,
    success_vector,
    true_success_vector,
)

WORST_TRUST_GRID_STEP = 0.1


class Mechanism(str, Enum):
    GROVES_ZERO = "groves-zero"
    GROVES_CLARKE = "groves-clarke"
    PEV = "pev"
    PEV_TRUST = "pev-trust"

    @classmethod
    def parse(cls, value: Mechanism | str) -> Mechanism:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower().replace("_", "-"))
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown mechanism {value!r}; expected one of {names}") from None

    @property
    def is_pev(self) -> bool:
        return self in (Mechanism.PEV, Mechanism.PEV_TRUST)


def check_mechanism_mode(scenario: Scenario, mechanism: Mechanism | str) -> Mechanism:
    mechanism = Mechanism.parse(mechanism)
    if mechanism is Mechanism.PEV and scenario.mode == TRUST:
        raise ScenarioError("mechanism 'pev' needs a plain-mode scenario; use 'pev-trust' for trust mode")
    if mechanism is Mechanism.PEV_TRUST and scenario.mode == PLAIN:
        raise ScenarioError("mechanism 'pev-trust' needs a trust-mode scenario")
    return mechanism


@dataclass(frozen=True)
class PaymentBreakdown:
    agent: int
    allocation: str
    h_i: float
    v_minus_i_success: float
    v_minus_i_failure: float
    payment_if_success: float
    payment_if_failure: float


@dataclass(frozen=True)
class MechanismOutcome:
    """Chosen allocation, payments and utilities in one of three modes.

    ``expected``: closed-form expectations under true PoS.  ``interim``: each
    agent's own execution realised, others at true PoS.  ``realized``: every
    execution realised.
    """

    chosen: str
    payments: Mapping[int, float]
    utilities: Mapping[int, float]
    mode: str
    success: Mapping[int, bool] | None = None


def _others_welfare(reports: TypeReportProfile, i: int, allocation: str, p: Sequence[float]) -> float:
    total = 0.0
    for j in reports.agents:
        if j != i:
            total += reports[j].valuations[allocation](p)
    return total


def _with_coordinate(p: Sequence[float], i: int, value: float) -> tuple[float, ...]:
    q = list(p)
    q[i] = value
    return tuple(q)


def pev_h(scenario: Scenario, reports: TypeReportProfile, i: int) -> float:
    """Best expected welfare the others reach without ``i``, with ``i``'s PoS fixed to 0."""
    if scenario.mode != PLAIN:
        raise ScenarioError("pev_h is defined for plain mode; use worst_trust_h in trust mode")
    others = restrict_reports(reports, i)
    _, ledger = efficient_allocation(scenario, others)
    return ledger.max_welfare


def _row_candidates(levels: Sequence[float], relevant: Sequence[int], n: int, i: int):
    for combo in itertools.product(levels, repeat=len(relevant)):
        row = [0.0] * n
        for j, x in zip(relevant, combo):
            row[j] = x
        yield tuple(row)


def worst_trust_detail(
    scenario: Scenario, reports: TypeReportProfile, i: int, method: str = "auto"
) -> tuple[float, str, tuple[float, ...]]:
    """``(h_i, allocation, worst row)`` for the worst-trust pivot.

    The pivot is ``min_c max_tau W_tau(c)`` over ``i``'s hypothetical opinion
    rows ``c``; each ``W_tau`` depends only on the block ``c^tau``, so it
    equals ``max_tau min_{c^tau} W_tau(c^tau)``, which is what is computed.
    ``method="vertex"`` searches ``{0,1}^(n-1)`` (exact for multilinear
    aggregations and valuations), ``"grid"`` a 0.1-step grid; ``"auto"``
    picks vertex when that is exact.
    """
    if scenario.mode != TRUST:
        raise ScenarioError("worst_trust_h needs a trust-mode scenario")
    others = restrict_reports(reports, i)
    n = scenario.n
    best: tuple[float, str, tuple[float, ...]] | None = None
    for alloc in scenario.allocations:
        if not is_feasible(scenario, others, alloc.id):
            continue
        # i's opinion about j only enters f_j
        relevant = [j for j in scenario.agents if j != i and i in scenario.aggregation[j][alloc.id].variables]
        use_vertices = method == "vertex" or (
            method == "auto"
            and all(scenario.aggregation[j][alloc.id].is_multilinear for j in relevant)
            and all(others[j].valuations[alloc.id].is_multilinear for j in others.agents)
        )
        if method not in ("auto", "vertex", "grid"):
            raise ValueError(f"unknown method {method!r}")
        levels = (0.0, 1.0) if use_vertices else tuple(np.round(np.arange(0, 1 + 1e-12, WORST_TRUST_GRID_STEP), 10))
        worst = None
        for row in _row_candidates(levels, relevant, n, i):
            w = expected_social_welfare(scenario, others, alloc.id, fill={i: row})
            if worst is None or w < worst[0]:
                worst = (w, row)
        if best is None or worst[0] > best[0]:
            best = (worst[0], alloc.id, worst[1])
    return best


def worst_trust_h(scenario: Scenario, reports: TypeReportProfile, i: int, method: str = "auto") -> float:
    """Others' optimal welfare without ``i``, assuming ``i`` holds the worst opinions of them."""
    return worst_trust_detail(scenario, reports, i, method)[0]


def pivot_h(scenario: Scenario, reports: TypeReportProfile, i: int) -> float:
    """``h_i`` for the PEV family and the Clarke pivot, by scenario mode."""
    if scenario.mode == PLAIN:
        return pev_h(scenario, reports, i)
    return worst_trust_h(scenario, reports, i)


def groves_payment(scenario: Scenario, reports: TypeReportProfile, pivot: str = "clarke") -> dict[int, float]:
    """``x_i = h_i - sum_{j != i} v^_j(tau*, p^)``, entirely from reports."""
    if pivot not in ("clarke", "zero"):
        raise ValueError(f"pivot must be 'clarke' or 'zero', got {pivot!r}")
    chosen, _ = efficient_allocation(scenario, reports)
    p_hat = success_vector(scenario, reports, chosen)
    payments = {}
    for i in reports.agents:
        h = pivot_h(scenario, reports, i) if pivot == "clarke" else 0.0
        payments[i] = h - _others_welfare(reports, i, chosen, p_hat)
    return payments


def pev_payment_breakdown(
    scenario: Scenario,
    reports: TypeReportProfile,
    i: int,
    true_pos_others: Sequence[float] | None = None,
    chosen: str | None = None,
) -> PaymentBreakdown:
    """Success and failure payments of agent ``i`` under the chosen allocation.

    ``true_pos_others`` is a full-length PoS vector at the chosen allocation
    (entry ``i`` ignored); by default the scenario's true PoS (aggregated
    from true trust rows in trust mode).
    """
    if chosen is None:
        chosen, _ = efficient_allocation(scenario, reports)
    p = tuple(true_pos_others) if true_pos_others is not None else true_success_vector(scenario, chosen)
    h = pivot_h(scenario, reports, i)
    v1 = _others_welfare(reports, i, chosen, _with_coordinate(p, i, 1.0))
    v0 = _others_welfare(reports, i, chosen, _with_coordinate(p, i, 0.0))
    return PaymentBreakdown(i, chosen, h, v1, v0, h - v1, h - v0)


def pev_payment_realized(
    scenario: Scenario, reports: TypeReportProfile, outcome: Mapping[int, bool] | Sequence[bool]
) -> dict[int, float]:
    """Implementable PEV payments from the observed 0/1 execution vector ``s``.

    ``x_i = h_i - sum_{j != i} v^_j(tau*, s)``.
    """
    s = _outcome_vector(scenario, outcome)
    chosen, _ = efficient_allocation(scenario, reports)
    return {i: pivot_h(scenario, reports, i) - _others_welfare(reports, i, chosen, s) for i in reports.agents}


def _outcome_vector(scenario: Scenario, outcome: Mapping[int, bool] | Sequence[bool]) -> tuple[float, ...]:
    if isinstance(outcome, Mapping):
        values = [outcome[i] for i in scenario.agents]
    else:
        values = list(outcome)
    if len(values) != scenario.n:
        raise ScenarioError(f"outcome needs one entry per agent ({scenario.n}), got {len(values)}")
    return tuple(1.0 if bool(x) else 0.0 for x in values)


def _true_vector_with(scenario: Scenario, true_type: AgentType, i: int, allocation: str) -> tuple[float, ...]:
    agent_types = {**scenario.true_types, i: true_type}
    return success_vector(scenario, TypeReportProfile(agent_types), allocation)


def pev_interim_utilities(
    scenario: Scenario, true_type: AgentType, reports: TypeReportProfile, i: int
) -> tuple[float, float]:
    """``(u^1, u^0)``: agent ``i``'s utility if it succeeds / fails, others at true PoS."""
    chosen, _ = efficient_allocation(scenario, reports)
    p = _true_vector_with(scenario, true_type, i, chosen)
    b = pev_payment_breakdown(scenario, reports, i, p, chosen)
    v = true_type.valuations[chosen]
    u1 = v(_with_coordinate(p, i, 1.0)) - b.payment_if_success
    u0 = v(_with_coordinate(p, i, 0.0)) - b.payment_if_failure
    return u1, u0


def _opinion_level_expected_utility(
    scenario: Scenario, true_type: AgentType, reports: TypeReportProfile, i: int, chosen: str, h: float
) -> float:
    # Each of i's opinions p_{i,j} is an independent PoS coordinate of the
    # composite valuation v(tau, f(P)); i's row is realised as b ~ Bernoulli.
    agent_types = {**scenario.true_types, i: true_type}
    matrix = opinion_matrix(scenario, TypeReportProfile(agent_types), chosen)
    own_row = matrix[i]
    relevant = [j for j in scenario.agents if i in scenario.aggregation[j][chosen].variables]
    v_i = true_type.valuations[chosen]
    total = 0.0
    for bits in itertools.product((0.0, 1.0), repeat=len(relevant)):
        weight = 1.0
        row = list(own_row)
        for j, b in zip(relevant, bits):
            weight *= own_row[j] if b else 1.0 - own_row[j]
            row[j] = b
        if weight == 0.0:
            continue
        matrix[i] = row
        rho = aggregate_matrix(scenario, matrix, chosen)
        total += weight * (v_i(rho) + _others_welfare(reports, i, chosen, rho))
    matrix[i] = own_row
    return total - h


def expected_utility(
    scenario: Scenario,
    true_type: AgentType,
    reports: TypeReportProfile,
    mechanism: Mechanism | str,
    i: int,
) -> float:
    """Agent ``i``'s expected utility given its true type and the submitted reports.

    PEV: ``p_i u^1 + (1 - p_i) u^0`` with true ``p``.  Groves:
    ``v_i(tau*, p) - x_i``.  PEV-trust: the expectation over ``i``'s opinion
    row realised coordinate-wise; it coincides with the aggregated-PoS
    formula whenever every aggregation and valuation is multilinear.
    """
    mechanism = check_mechanism_mode(scenario, mechanism)
    chosen, _ = efficient_allocation(scenario, reports)
    if mechanism in (Mechanism.GROVES_ZERO, Mechanism.GROVES_CLARKE):
        pivot = "zero" if mechanism is Mechanism.GROVES_ZERO else "clarke"
        p_hat = success_vector(scenario, reports, chosen)
        h = pivot_h(scenario, reports, i) if pivot == "clarke" else 0.0
        x = h - _others_welfare(reports, i, chosen, p_hat)
        return true_type.valuations[chosen](_true_vector_with(scenario, true_type, i, chosen)) - x
    if mechanism is Mechanism.PEV:
        p_i = true_type.pos[chosen]
        u1, u0 = pev_interim_utilities(scenario, true_type, reports, i)
        return p_i * u1 + (1.0 - p_i) * u0
    h = worst_trust_h(scenario, reports, i)
    return _opinion_level_expected_utility(scenario, true_type, reports, i, chosen, h)


def expected_payment(scenario: Scenario, reports: TypeReportProfile, mechanism: Mechanism | str, i: int) -> float:
    """Payment of ``i`` in expectation over the executions, under the scenario's true types."""
    mechanism = check_mechanism_mode(scenario, mechanism)
    if not mechanism.is_pev:
        pivot = "zero" if mechanism is Mechanism.GROVES_ZERO else "clarke"
        return groves_payment(scenario, reports, pivot)[i]
    b = pev_payment_breakdown(scenario, reports, i)
    q = true_success_vector(scenario, b.allocation)[i]
    return q * b.payment_if_success + (1.0 - q) * b.payment_if_failure


def expected_outcome(scenario: Scenario, reports: TypeReportProfile, mechanism: Mechanism | str) -> MechanismOutcome:
    mechanism = check_mechanism_mode(scenario, mechanism)
    chosen, _ = efficient_allocation(scenario, reports)
    payments = {i: expected_payment(scenario, reports, mechanism, i) for i in scenario.agents}
    utilities = {i: expected_utility(scenario, scenario.true_types[i], reports, mechanism, i) for i in scenario.agents}
    return MechanismOutcome(chosen, payments, utilities, "expected")


def interim_outcome(
    scenario: Scenario,
    reports: TypeReportProfile,
    mechanism: Mechanism | str,
    own_success: Mapping[int, bool],
) -> MechanismOutcome:
    """Each agent's own execution realised as given; others kept at true PoS."""
    mechanism = check_mechanism_mode(scenario, mechanism)
    chosen, _ = efficient_allocation(scenario, reports)
    p = true_success_vector(scenario, chosen)
    payments, utilities = {}, {}
    for i in scenario.agents:
        q = _with_coordinate(p, i, 1.0 if own_success[i] else 0.0)
        if mechanism.is_pev:
            b = pev_payment_breakdown(scenario, reports, i, p, chosen)
            payments[i] = b.payment_if_success if own_success[i] else b.payment_if_failure
        else:
            payments[i] = expected_payment(scenario, reports, mechanism, i)
        utilities[i] = scenario.true_types[i].valuations[chosen](q) - payments[i]
    return MechanismOutcome(chosen, payments, utilities, "interim", dict(own_success))
