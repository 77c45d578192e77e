"""Truthfulness and IR checks by exhaustive search, plus seeded execution simulation.

Every certificate here is relative to a finite deviation grid: a clean sweep
means "no profitable deviation found", never truthfulness over the whole
continuous type space.

Seeds: one root seed; replication ``k`` uses
``numpy.random.SeedSequence(root, spawn_key=(k,))`` (see :func:`derive_seed`),
so any single replication can be reproduced in isolation.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .mechanisms import (
    Mechanism,
    MechanismOutcome,
    _opinion_level_expected_utility,
    _others_welfare,
    _true_vector_with,
    _with_coordinate,
    check_mechanism_mode,
    groves_payment,
    pivot_h,
)
from .model import (
    TRUST,
    AgentType,
    PolynomialValuation,
    Scenario,
    ScenarioError,
    TypeReportProfile,
    validate_scenario,
    validation_points,
)
from .welfare import efficient_allocation, success_vector, true_success_vector

GAIN_EPS = 1e-9
IR_EPS = 1e-9
DEFAULT_POS_GRID = tuple(round(k / 10, 10) for k in range(11))
DEFAULT_COEFF_SCALES = (0.0, 0.5, 1.0, 2.0)

NO_DEVIATION = "no_profitable_deviation_found"
MANIPULATION = "manipulation_found"


# --------------------------------------------------------------------------
# Deviation spaces


@dataclass(frozen=True)
class Misreport:
    summary: str
    report: AgentType


@dataclass(frozen=True)
class DeviationSpace:
    """Finite grid of misreports, one deviating component (allocation) at a time.

    For each allocation the agent may report any PoS in ``pos_grid`` (in
    trust mode: any single opinion entry on ``pos_grid``) combined with any
    multiplier in ``coeff_scales`` on its valuation for that allocation.
    ``scope`` restricts this to PoS only or valuations only.  The truthful
    report is always part of the space and comes first.
    """

    pos_grid: tuple[float, ...] = DEFAULT_POS_GRID
    coeff_scales: tuple[float, ...] = DEFAULT_COEFF_SCALES
    scope: str = "both"

    def __post_init__(self) -> None:
        if not self.pos_grid or not self.coeff_scales:
            raise ValueError("deviation grids must be nonempty")
        if self.scope not in ("pos", "valuations", "both"):
            raise ValueError(f"scope must be 'pos', 'valuations' or 'both', got {self.scope!r}")
        for x in self.pos_grid:
            if not 0.0 <= x <= 1.0:
                raise ValueError(f"PoS grid value {x} outside [0,1]")
        object.__setattr__(self, "pos_grid", tuple(float(x) for x in self.pos_grid))
        object.__setattr__(self, "coeff_scales", tuple(float(x) for x in self.coeff_scales))

    def _pos_values(self, true_value: float) -> tuple[float, ...]:
        if self.scope == "valuations":
            return (true_value,)
        grid = self.pos_grid
        return grid if true_value in grid else grid + (true_value,)

    def _scales(self) -> tuple[float, ...]:
        if self.scope == "pos":
            return (1.0,)
        return self.coeff_scales if 1.0 in self.coeff_scales else self.coeff_scales + (1.0,)

    def misreports(self, scenario: Scenario, agent: int, truth: AgentType | None = None) -> Iterator[Misreport]:
        """Truthful report first, then every distinct single-component misreport in scan order."""
        truth = truth if truth is not None else scenario.true_types[agent]
        yield Misreport("truthful", truth)
        seen = {_report_key(truth)}
        for alloc in scenario.allocation_ids:
            if scenario.mode == TRUST:
                entries = [(j, truth.trust_row[alloc][j]) for j in scenario.agents]
            else:
                entries = [(None, truth.pos[alloc])]
            for j, true_value in entries:
                for value in self._pos_values(true_value):
                    for scale in self._scales():
                        if j is None:
                            report = truth.with_pos(alloc, value)
                            pos_part = f"pos[{alloc}]={value:g}"
                        else:
                            report = truth.with_opinion(alloc, j, value)
                            pos_part = f"trust[{alloc}][{j}]={value:g}"
                        if scale != 1.0:
                            report = report.scaled(alloc, scale)
                        key = _report_key(report)
                        if key in seen:
                            continue
                        seen.add(key)
                        parts = []
                        if value != true_value:
                            parts.append(pos_part)
                        if report.valuations[alloc] != truth.valuations[alloc]:
                            parts.append(f"scale[{alloc}]={scale:g}")
                        yield Misreport(", ".join(parts), report)

    def size(self, scenario: Scenario, agent: int) -> int:
        return sum(1 for _ in self.misreports(scenario, agent))


def _report_key(t: AgentType):
    pos = tuple(sorted(t.pos.items())) if t.pos is not None else None
    rows = tuple(sorted(t.trust_row.items())) if t.trust_row is not None else None
    vals = tuple(sorted((a, v.terms) for a, v in t.valuations.items()))
    return pos, rows, vals


# --------------------------------------------------------------------------
# Utility evaluation with the pivot cached per (others' reports)


class _UtilityOracle:
    """Expected utility of one agent against fixed reports of the others.

    ``h_i`` depends on the others' reports only, so it is computed once.
    """

    def __init__(self, scenario: Scenario, mechanism: Mechanism, agent: int, others: TypeReportProfile):
        self.scenario = scenario
        self.mechanism = mechanism
        self.agent = agent
        self.others = others
        needs_h = mechanism is not Mechanism.GROVES_ZERO
        full = TypeReportProfile({**others.reports, agent: scenario.true_types[agent]})
        self.h = pivot_h(scenario, full, agent) if needs_h else 0.0

    def __call__(self, true_type: AgentType, report: AgentType) -> float:
        s, i = self.scenario, self.agent
        reports = TypeReportProfile({**self.others.reports, i: report})
        chosen, _ = efficient_allocation(s, reports)
        if self.mechanism is Mechanism.PEV_TRUST:
            return _opinion_level_expected_utility(s, true_type, reports, i, chosen, self.h)
        p = _true_vector_with(s, true_type, i, chosen)
        v_i = true_type.valuations[chosen]
        if self.mechanism is Mechanism.PEV:
            q = true_type.pos[chosen]
            p1, p0 = _with_coordinate(p, i, 1.0), _with_coordinate(p, i, 0.0)
            u1 = v_i(p1) - self.h + _others_welfare(reports, i, chosen, p1)
            u0 = v_i(p0) - self.h + _others_welfare(reports, i, chosen, p0)
            return q * u1 + (1.0 - q) * u0
        p_hat = success_vector(s, reports, chosen)
        return v_i(p) - (self.h - _others_welfare(reports, i, chosen, p_hat))


# --------------------------------------------------------------------------
# Ex-post truthfulness


@dataclass(frozen=True)
class LedgerRow:
    summary: str
    truthful_utility: float
    deviating_utility: float
    gain: float


@dataclass(frozen=True)
class DeviationReport:
    """Outcome of a truthfulness sweep for one agent (others truthful).

    ``witness_*`` is the first profitable misreport in scan order;
    ``best_*`` the one with the largest gain.
    """

    agent: int
    mechanism: str
    truthful_utility: float
    max_gain: float
    best_summary: str | None
    best_misreport: AgentType | None
    witness_summary: str | None
    witness_gain: float | None
    witness_misreport: AgentType | None
    ledger: tuple[LedgerRow, ...]
    verdict: str

    @property
    def manipulable(self) -> bool:
        return self.verdict == MANIPULATION


def _sweep_agent(
    scenario: Scenario, mechanism: Mechanism, space: DeviationSpace, i: int, stop_at_first: bool = False
) -> DeviationReport:
    truth = scenario.true_types[i]
    others = TypeReportProfile({j: t for j, t in scenario.true_types.items() if j != i})
    utility = _UtilityOracle(scenario, mechanism, i, others)
    truthful_u = utility(truth, truth)
    ledger: list[LedgerRow] = []
    best = witness = None
    for m in space.misreports(scenario, i):
        u = truthful_u if m.summary == "truthful" else utility(truth, m.report)
        gain = u - truthful_u
        ledger.append(LedgerRow(m.summary, truthful_u, u, gain))
        if gain > GAIN_EPS:
            if witness is None:
                witness = (m, gain)
            if best is None or gain > best[1]:
                best = (m, gain)
            if stop_at_first:
                break
    max_gain = max(row.gain for row in ledger)
    return DeviationReport(
        agent=i,
        mechanism=mechanism.value,
        truthful_utility=truthful_u,
        max_gain=max_gain,
        best_summary=best[0].summary if best else None,
        best_misreport=best[0].report if best else None,
        witness_summary=witness[0].summary if witness else None,
        witness_gain=witness[1] if witness else None,
        witness_misreport=witness[0].report if witness else None,
        ledger=tuple(ledger),
        verdict=MANIPULATION if max_gain > GAIN_EPS else NO_DEVIATION,
    )


def check_ex_post_truthful(
    scenario: Scenario,
    mechanism: Mechanism | str,
    space: DeviationSpace | None = None,
    agent: int | None = None,
) -> DeviationReport | list[DeviationReport]:
    """Sweep every misreport of ``agent`` (or of each agent when ``None``) with the others truthful."""
    mechanism = check_mechanism_mode(scenario, mechanism)
    space = space or DeviationSpace()
    if agent is not None:
        if agent not in scenario.agents:
            raise ScenarioError(f"unknown agent {agent}")
        return _sweep_agent(scenario, mechanism, space, agent)
    return [_sweep_agent(scenario, mechanism, space, i) for i in scenario.agents]


# --------------------------------------------------------------------------
# Manipulation finder over scenario families


@dataclass(frozen=True)
class TuneParameter:
    """One tunable entry of the family's true types.

    ``kind="coeff"`` multiplies coefficient ``index`` (in canonical term
    order) of ``agent``'s valuation for ``allocation`` by a grid scale;
    ``"pos"`` sets the agent's PoS there; ``"opinion"`` sets trust-row entry
    ``index``.  ``values`` overrides the grid taken from the deviation space.
    """

    kind: str
    agent: int
    allocation: str
    index: int = 0
    values: tuple[float, ...] | None = None

    @property
    def label(self) -> str:
        if self.kind == "pos":
            return f"pos[{self.agent}][{self.allocation}]"
        if self.kind == "opinion":
            return f"trust[{self.agent}][{self.allocation}][{self.index}]"
        return f"coeff[{self.agent}][{self.allocation}][{self.index}]"

    def grid(self, space: DeviationSpace) -> tuple[float, ...]:
        if self.values is not None:
            return tuple(self.values)
        return space.coeff_scales if self.kind == "coeff" else space.pos_grid

    def apply(self, scenario: Scenario, base: Scenario, value: float) -> Scenario:
        t = scenario.true_types[self.agent]
        if self.kind == "pos":
            t = t.with_pos(self.allocation, value)
        elif self.kind == "opinion":
            t = t.with_opinion(self.allocation, self.index, value)
        elif self.kind == "coeff":
            base_terms = base.true_types[self.agent].valuations[self.allocation].terms
            coeff, mono = base_terms[self.index]
            current = scenario.true_types[self.agent].valuations[self.allocation]
            others = [(c, m) for c, m in current.terms if m != mono]
            t = t.with_valuation(self.allocation, PolynomialValuation(others + [(coeff * value, mono)]))
        else:
            raise ValueError(f"unknown parameter kind {self.kind!r}")
        return scenario.with_true_type(self.agent, t)


@dataclass(frozen=True)
class ScenarioFamily:
    base: Scenario
    parameters: tuple[TuneParameter, ...]
    deviators: tuple[int, ...] | None = None
    name: str = ""

    def profiles(self, space: DeviationSpace) -> Iterator[tuple[tuple[tuple[str, float], ...], Scenario]]:
        grids = [p.grid(space) for p in self.parameters]
        for values in itertools.product(*grids):
            s = self.base
            for param, value in zip(self.parameters, values):
                s = param.apply(s, self.base, value)
            try:
                s = validate_scenario(s)
            except ScenarioError:
                continue
            yield tuple((p.label, v) for p, v in zip(self.parameters, values)), s


@dataclass(frozen=True)
class ManipulationWitness:
    family: str
    profile: tuple[tuple[str, float], ...]
    scenario: Scenario = field(repr=False)
    agent: int
    summary: str
    misreport: AgentType = field(repr=False)
    truthful_utility: float
    deviating_utility: float
    gain: float


def find_manipulation(
    family: ScenarioFamily | Scenario,
    mechanism: Mechanism | str,
    space: DeviationSpace | None = None,
) -> ManipulationWitness | None:
    """First profitable misreport in scan order: profiles, then agents, then misreports."""
    if isinstance(family, Scenario):
        family = ScenarioFamily(family, (), name=family.name)
    space = space or DeviationSpace()
    mechanism = check_mechanism_mode(family.base, mechanism)
    deviators = family.deviators if family.deviators is not None else family.base.agents
    for profile, scenario in family.profiles(space):
        for i in deviators:
            report = _sweep_agent(scenario, mechanism, space, i, stop_at_first=True)
            if report.witness_misreport is not None:
                return ManipulationWitness(
                    family.name or family.base.name,
                    profile,
                    scenario,
                    i,
                    report.witness_summary,
                    report.witness_misreport,
                    report.truthful_utility,
                    report.truthful_utility + report.witness_gain,
                    report.witness_gain,
                )
    return None


# --------------------------------------------------------------------------
# Individual rationality


@dataclass(frozen=True)
class IrWitness:
    agent: int
    allocation: str
    point: tuple[float, ...]
    value: float


@dataclass(frozen=True)
class EmpiricalIrWitness:
    agent: int
    profile: str
    chosen: str
    utility: float


@dataclass(frozen=True)
class IrReport:
    static_ok: bool | None = None
    static_witness: IrWitness | None = None
    empirical_min_utility: float | None = None
    empirical_witness: EmpiricalIrWitness | None = None

    @property
    def violated(self) -> bool:
        return self.static_ok is False or self.empirical_witness is not None


def check_ir_condition(scenario: Scenario) -> IrReport:
    """Agents without tasks must never value an allocation negatively (checked on the validation grid)."""
    worst: IrWitness | None = None
    for i, t in scenario.true_types.items():
        for alloc in scenario.allocations:
            if alloc.assigns(i):
                continue
            v = t.valuations[alloc.id]
            points = validation_points(v.variables, scenario.n)
            values = v.evaluate_many(points)
            k = int(np.argmin(values))
            if values[k] < -1e-12 and (worst is None or values[k] < worst.value):
                worst = IrWitness(i, alloc.id, tuple(float(x) for x in points[k]), float(values[k]))
    return IrReport(static_ok=worst is None, static_witness=worst)


def _other_profiles(scenario: Scenario, space: DeviationSpace, i: int) -> Iterator[tuple[str, TypeReportProfile]]:
    truth = scenario.truthful_reports()
    yield "truthful", truth
    for j in scenario.agents:
        if j == i:
            continue
        for m in space.misreports(scenario, j):
            if m.summary != "truthful":
                yield f"agent {j}: {m.summary}", truth.replace(j, m.report)
    # every other agent scales its valuation for a single allocation together
    for alloc in scenario.allocation_ids:
        for scale in space.coeff_scales:
            if scale == 1.0:
                continue
            profile = truth
            for j in scenario.agents:
                if j != i:
                    profile = profile.replace(j, scenario.true_types[j].scaled(alloc, scale))
            yield f"others: scale[{alloc}]={scale:g}", profile


def check_ir_empirical(
    scenario: Scenario, mechanism: Mechanism | str, space: DeviationSpace | None = None
) -> IrReport:
    """Minimum truthful expected utility over type profiles of the others.

    Profiles: all truthful, each single other agent deviating over the
    space, and all others jointly scaling one allocation's valuation.  The
    others' profile is treated as their actual types (their reported PoS is
    what gets realised), matching the quantifier over every ``theta_-i``.
    """
    mechanism = check_mechanism_mode(scenario, mechanism)
    space = space or DeviationSpace()
    min_u = math.inf
    witness = None
    for i in scenario.agents:
        truth = scenario.true_types[i]
        for label, profile in _other_profiles(scenario, space, i):
            world = replace(scenario, true_types=dict(profile.reports))
            others = TypeReportProfile({j: t for j, t in profile.reports.items() if j != i})
            u = _UtilityOracle(world, mechanism, i, others)(truth, truth)
            if u < min_u:
                min_u = u
                if u < -IR_EPS:
                    chosen, _ = efficient_allocation(world, profile)
                    witness = EmpiricalIrWitness(i, label, chosen, u)
    return IrReport(empirical_min_utility=min_u, empirical_witness=witness)


def check_ir(scenario: Scenario, mechanism: Mechanism | str, space: DeviationSpace | None = None) -> IrReport:
    static = check_ir_condition(scenario)
    empirical = check_ir_empirical(scenario, mechanism, space)
    return replace(
        static,
        empirical_min_utility=empirical.empirical_min_utility,
        empirical_witness=empirical.empirical_witness,
    )


# --------------------------------------------------------------------------
# Simulation


def derive_seed(root: int, replication: int) -> np.random.SeedSequence:
    """Seed of replication ``k``: ``SeedSequence(root, spawn_key=(k,))``."""
    return np.random.SeedSequence(root, spawn_key=(replication,))


def simulate_execution(
    scenario: Scenario, allocation: str, seed: int | np.random.SeedSequence
) -> tuple[bool, ...]:
    """Draw each agent's success from its true PoS (aggregated in trust mode).

    Agents without tasks always succeed.  One uniform is drawn per agent in
    id order, so the result is a deterministic function of the seed.
    """
    alloc = scenario.allocation(allocation)
    probs = true_success_vector(scenario, allocation)
    u = np.random.default_rng(seed).random(scenario.n)
    return tuple(bool(u[i] < probs[i]) if alloc.assigns(i) else True for i in scenario.agents)


class _EpisodePlan:
    """Allocation and pivots fixed once; realised payments depend only on the outcome."""

    def __init__(self, scenario: Scenario, reports: TypeReportProfile, mechanism: Mechanism):
        self.scenario = scenario
        self.reports = reports
        self.mechanism = mechanism
        self.chosen, _ = efficient_allocation(scenario, reports)
        if mechanism.is_pev:
            self.h = {i: pivot_h(scenario, reports, i) for i in reports.agents}
            self.fixed = None
        else:
            pivot = "zero" if mechanism is Mechanism.GROVES_ZERO else "clarke"
            self.fixed = groves_payment(scenario, reports, pivot)
        self._cache: dict[tuple[bool, ...], tuple[dict[int, float], dict[int, float]]] = {}

    def realize(self, success: tuple[bool, ...]) -> tuple[dict[int, float], dict[int, float]]:
        if success not in self._cache:
            s = tuple(1.0 if b else 0.0 for b in success)
            if self.fixed is None:
                payments = {
                    i: self.h[i] - _others_welfare(self.reports, i, self.chosen, s) for i in self.reports.agents
                }
            else:
                payments = dict(self.fixed)
            utilities = {
                i: self.scenario.true_types[i].valuations[self.chosen](s) - payments[i] for i in self.scenario.agents
            }
            self._cache[success] = (payments, utilities)
        return self._cache[success]

    def episode(self, seed) -> MechanismOutcome:
        success = simulate_execution(self.scenario, self.chosen, seed)
        payments, utilities = self.realize(success)
        return MechanismOutcome(
            self.chosen, dict(payments), dict(utilities), "realized", dict(zip(self.scenario.agents, success))
        )


def run_episode(
    scenario: Scenario,
    reports: TypeReportProfile,
    mechanism: Mechanism | str,
    seed: int | np.random.SeedSequence,
) -> MechanismOutcome:
    """Choose the efficient allocation, simulate execution and settle realised payments."""
    mechanism = check_mechanism_mode(scenario, mechanism)
    return _EpisodePlan(scenario, reports, mechanism).episode(seed)


@dataclass(frozen=True)
class MonteCarloRow:
    agent: int
    mean: float
    stderr: float
    expected: float
    z: float | None


@dataclass(frozen=True)
class MonteCarloReport:
    mechanism: str
    chosen: str
    replications: int
    seed: int
    rows: tuple[MonteCarloRow, ...]

    @property
    def max_abs_z(self) -> float:
        zs = [abs(r.z) if r.z is not None else math.inf for r in self.rows]
        return max(zs)


def monte_carlo_check(
    scenario: Scenario,
    reports: TypeReportProfile,
    mechanism: Mechanism | str,
    replications: int,
    seed: int,
) -> MonteCarloReport:
    """Mean realised utility over seeded episodes vs. the closed-form expected utility.

    ``z = (mean - expected) / stderr``; when every replication is identical
    (stderr 0) ``z`` is 0 if the mean matches exactly and ``None`` otherwise.
    """
    from .mechanisms import expected_utility

    if replications < 2:
        raise ValueError("monte_carlo_check needs at least 2 replications")
    mechanism = check_mechanism_mode(scenario, mechanism)
    plan = _EpisodePlan(scenario, reports, mechanism)
    samples = np.empty((replications, scenario.n))
    for k in range(replications):
        success = simulate_execution(scenario, plan.chosen, derive_seed(seed, k))
        _, utilities = plan.realize(success)
        samples[k] = [utilities[i] for i in scenario.agents]
    means = samples.mean(axis=0)
    stderrs = samples.std(axis=0, ddof=1) / math.sqrt(replications)
    rows = []
    for i in scenario.agents:
        expected = expected_utility(scenario, scenario.true_types[i], reports, mechanism, i)
        diff = float(means[i]) - expected
        if stderrs[i] > 0:
            z = diff / float(stderrs[i])
        else:
            z = 0.0 if abs(diff) <= 1e-12 else None
        rows.append(MonteCarloRow(i, float(means[i]), float(stderrs[i]), expected, z))
    return MonteCarloReport(mechanism.value, plan.chosen, replications, seed, tuple(rows))


def bernoulli_weights(p: Sequence[float]) -> Iterator[tuple[tuple[int, ...], float]]:
    """All outcomes ``s in {0,1}^n`` with ``Pr[s | p]`` (brute-force oracle helper)."""
    for s in itertools.product((0, 1), repeat=len(p)):
        w = 1.0
        for sj, pj in zip(s, p):
            w *= pj if sj else 1.0 - pj
        yield s, w


def outcome_average(
    values: Mapping[tuple[int, ...], float] | None, p: Sequence[float], fn=None
) -> float:
    """``sum_s Pr[s|p] * fn(s)`` by enumeration."""
    total = 0.0
    for s, w in bernoulli_weights(p):
        total += w * (fn(s) if fn is not None else values[s])
    return total
