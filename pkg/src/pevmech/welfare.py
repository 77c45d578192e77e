"""Expected social welfare, the efficient allocation choice and multilinearity checks."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .model import (
    AGGREGATION_TOL,
    PLAIN,
    PolynomialValuation,
    Scenario,
    ScenarioError,
    TypeReportProfile,
    validation_points,
)

TIE_TOL = 1e-12
MULTILINEAR_TOL = 1e-9


@dataclass(frozen=True)
class WelfareLedger:
    """Expected social welfare of every allocation feasible for the reporting agents."""

    welfare: Mapping[str, float]
    argmax: str
    ties: tuple[str, ...]
    infeasible: tuple[str, ...] = ()

    @property
    def max_welfare(self) -> float:
        return self.welfare[self.argmax]


@dataclass(frozen=True)
class MultilinearityWitness:
    allocation: str | None
    variable: int
    point: tuple[float, ...]
    lhs: float
    rhs: float


@dataclass(frozen=True)
class MultilinearityReport:
    """Syntactic verdict (authoritative) plus a diagnostic point where the identity fails."""

    is_multilinear: bool
    witness: MultilinearityWitness | None = None


def _clamp_probability(x: float, where: str) -> float:
    if x < -AGGREGATION_TOL or x > 1.0 + AGGREGATION_TOL:
        raise ScenarioError(f"aggregated PoS outside [0,1]: {where} = {x}")
    return min(1.0, max(0.0, x))


def pos_vector(scenario: Scenario, reports: TypeReportProfile, allocation: str) -> tuple[float, ...]:
    """Reported PoS of every agent for ``allocation``; agents without a report get 0."""
    return tuple(reports[j].pos[allocation] if j in reports else 0.0 for j in scenario.agents)


def opinion_matrix(
    scenario: Scenario,
    reports: TypeReportProfile,
    allocation: str,
    fill: Mapping[int, Sequence[float]] | None = None,
) -> list[list[float]]:
    """Row ``k`` holds agent ``k``'s opinions ``p_{k,j}`` for ``allocation``.

    Rows of agents without a report come from ``fill`` (default all zeros).
    """
    fill = fill or {}
    rows = []
    for k in scenario.agents:
        if k in reports:
            rows.append(list(reports[k].trust_row[allocation]))
        else:
            rows.append(list(fill.get(k, (0.0,) * scenario.n)))
    return rows


def aggregate_matrix(
    scenario: Scenario,
    matrix: Sequence[Sequence[float]],
    allocation: str,
    absent: frozenset[int] | set[int] = frozenset(),
) -> tuple[float, ...]:
    """``rho_i = f_i(column i of matrix)`` for every agent; agents in ``absent`` get 0."""
    rho = []
    for i in scenario.agents:
        if i in absent:
            rho.append(0.0)
            continue
        column = [matrix[k][i] for k in scenario.agents]
        value = scenario.aggregation[i][allocation](column)
        rho.append(_clamp_probability(value, f"f_{i}[{allocation}]"))
    return tuple(rho)


def aggregate_pos(
    scenario: Scenario,
    reports: TypeReportProfile,
    allocation: str,
    fill: Mapping[int, Sequence[float]] | None = None,
) -> tuple[float, ...]:
    """Aggregated PoS ``rho^tau`` from the reported trust rows.

    Agents that did not report have ``rho_i = 0`` (they execute nothing);
    their opinions about others are taken from ``fill`` (default 0).
    """
    if scenario.mode != "trust":
        raise ScenarioError("aggregate_pos needs a trust-mode scenario")
    scenario.allocation(allocation)
    matrix = opinion_matrix(scenario, reports, allocation, fill)
    absent = frozenset(i for i in scenario.agents if i not in reports)
    return aggregate_matrix(scenario, matrix, allocation, absent)


def success_vector(
    scenario: Scenario,
    reports: TypeReportProfile,
    allocation: str,
    fill: Mapping[int, Sequence[float]] | None = None,
) -> tuple[float, ...]:
    """The PoS profile welfare is evaluated at: reported PoS, or aggregated PoS in trust mode."""
    if scenario.mode == PLAIN:
        return pos_vector(scenario, reports, allocation)
    return aggregate_pos(scenario, reports, allocation, fill)


def true_success_vector(scenario: Scenario, allocation: str) -> tuple[float, ...]:
    return success_vector(scenario, scenario.truthful_reports(), allocation)


def expected_social_welfare(
    scenario: Scenario,
    reports: TypeReportProfile,
    allocation: str,
    fill: Mapping[int, Sequence[float]] | None = None,
) -> float:
    """Sum of the reporters' valuations for ``allocation`` at the reported (or aggregated) PoS."""
    scenario.allocation(allocation)
    p = success_vector(scenario, reports, allocation, fill)
    total = 0.0
    for j in reports.agents:
        total += reports[j].valuations[allocation](p)
    return total


def is_feasible(scenario: Scenario, reports: TypeReportProfile, allocation: str) -> bool:
    """Feasible iff every agent with a nonempty task set is among the reporters."""
    alloc = scenario.allocation(allocation)
    return all(j in reports for j in scenario.agents if alloc.assigns(j))


def efficient_allocation(
    scenario: Scenario,
    reports: TypeReportProfile,
    fill: Mapping[int, Sequence[float]] | None = None,
) -> tuple[str, WelfareLedger]:
    """Welfare-maximising feasible allocation; ties go to the first declared allocation."""
    welfare: dict[str, float] = {}
    infeasible = []
    for alloc in scenario.allocations:
        if is_feasible(scenario, reports, alloc.id):
            welfare[alloc.id] = expected_social_welfare(scenario, reports, alloc.id, fill)
        else:
            infeasible.append(alloc.id)
    best = max(welfare.values())
    ties = tuple(a for a, w in welfare.items() if w >= best - TIE_TOL)
    return ties[0], WelfareLedger(welfare, ties[0], ties, tuple(infeasible))


def _semantic_witness(
    f: PolynomialValuation, n: int, allocation: str | None, seed: int
) -> MultilinearityWitness | None:
    variables = sorted(f.variables)
    if not variables:
        return None
    points = validation_points(variables, n, seed=seed)
    lhs = f.evaluate_many(points)
    best = None
    for j in variables:
        hi = points.copy()
        hi[:, j] = 1.0
        lo = points.copy()
        lo[:, j] = 0.0
        rhs = points[:, j] * f.evaluate_many(hi) + (1.0 - points[:, j]) * f.evaluate_many(lo)
        gap = np.abs(lhs - rhs)
        k = int(np.argmax(gap))
        if gap[k] > MULTILINEAR_TOL and (best is None or gap[k] > best[0]):
            best = (float(gap[k]), j, k, float(rhs[k]))
    if best is None:
        return None
    _, j, k, rhs_k = best
    return MultilinearityWitness(allocation, j, tuple(float(x) for x in points[k]), float(lhs[k]), rhs_k)


def check_multilinear_valuation(
    v: PolynomialValuation, n: int | None = None, allocation: str | None = None, seed: int = 0
) -> MultilinearityReport:
    """Multilinear iff every exponent is at most 1.

    For non-multilinear ``v`` the witness is the grid/random point with the
    largest gap between ``v(p)`` and ``p_j v(p|p_j=1) + (1-p_j) v(p|p_j=0)``.
    """
    n = n if n is not None else (max(v.variables) + 1 if v.variables else 0)
    if v.is_multilinear:
        return MultilinearityReport(True)
    return MultilinearityReport(False, _semantic_witness(v, n, allocation, seed))


def check_multilinear_aggregation(
    f: PolynomialValuation, n: int | None = None, allocation: str | None = None, seed: int = 0
) -> MultilinearityReport:
    """Same contract as :func:`check_multilinear_valuation`, over the trust-column variables."""
    return check_multilinear_valuation(f, n, allocation, seed)


def semantic_multilinearity_gap(v: PolynomialValuation, n: int, seed: int = 0) -> float:
    """Largest identity gap over the validation points (0 for multilinear ``v`` up to rounding)."""
    variables = sorted(v.variables)
    if not variables:
        return 0.0
    points = validation_points(variables, n, seed=seed)
    lhs = v.evaluate_many(points)
    worst = 0.0
    for j in variables:
        hi = points.copy()
        hi[:, j] = 1.0
        lo = points.copy()
        lo[:, j] = 0.0
        rhs = points[:, j] * v.evaluate_many(hi) + (1.0 - points[:, j]) * v.evaluate_many(lo)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


@dataclass(frozen=True)
class ScenarioMultilinearity:
    """Per-function multilinearity verdicts for a whole scenario."""

    valuations: Mapping[tuple[int, str], MultilinearityReport]
    aggregations: Mapping[tuple[int, str], MultilinearityReport]

    @property
    def all_multilinear(self) -> bool:
        return all(r.is_multilinear for r in self.valuations.values()) and all(
            r.is_multilinear for r in self.aggregations.values()
        )


def check_scenario_multilinearity(scenario: Scenario) -> ScenarioMultilinearity:
    valuations = {
        (i, a): check_multilinear_valuation(t.valuations[a], scenario.n, a)
        for i, t in scenario.true_types.items()
        for a in scenario.allocation_ids
    }
    aggregations = {}
    if scenario.aggregation is not None:
        aggregations = {
            (i, a): check_multilinear_aggregation(f, scenario.n, a)
            for i, spec in scenario.aggregation.items()
            for a, f in spec.items()
        }
    return ScenarioMultilinearity(valuations, aggregations)
