"""Scenario data model: agents, allocations, types, valuations and trust aggregation.

A scenario bundles the agents ``0..n-1``, a finite allocation space, every
agent's true type and (in trust mode) the PoS aggregation functions.  All
objects are immutable once validated; :func:`validate_scenario` is the single
entry point that canonicalises raw input.

Valuations are polynomials in the PoS profile of the allocation being
evaluated::

    v = PolynomialValuation([(1.0, {0: 1, 1: 1})])   # p_0 * p_1
    v((0.0, 1.0))   # -> 0.0
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

PLAIN = "plain"
TRUST = "trust"
MODES = (PLAIN, TRUST)

NULL_ALLOCATION_ID = "null"

# Tolerance for aggregation outputs slightly outside [0, 1].
AGGREGATION_TOL = 1e-9

Monomial = tuple[tuple[int, int], ...]


class ScenarioError(ValueError):
    """Raised when a scenario, report profile or input vector violates an invariant."""


def _monomial(exponents: Mapping[int, int] | Iterable[tuple[int, int]]) -> Monomial:
    items = exponents.items() if isinstance(exponents, Mapping) else exponents
    merged: dict[int, int] = {}
    for agent, exp in items:
        agent = int(agent)
        if agent < 0:
            raise ScenarioError(f"negative agent id {agent} in exponents")
        if int(exp) != exp or exp < 0:
            raise ScenarioError(f"exponent must be a non-negative integer, got {exp!r}")
        if exp:
            merged[agent] = merged.get(agent, 0) + int(exp)
    return tuple(sorted(merged.items()))


@dataclass(frozen=True)
class PolynomialValuation:
    """Sum of ``coeff * prod_j p_j**e_j`` terms, merged into canonical form.

    Terms sharing an exponent mapping are merged, zero coefficients are
    dropped and terms are ordered by monomial, so two equal polynomials
    compare equal.
    """

    terms: tuple[tuple[float, Monomial], ...] = ()

    def __post_init__(self) -> None:
        merged: dict[Monomial, float] = {}
        for coeff, exponents in self.terms:
            coeff = float(coeff)
            if not math.isfinite(coeff):
                raise ScenarioError(f"non-finite coefficient {coeff!r}")
            key = _monomial(exponents)
            merged[key] = merged.get(key, 0.0) + coeff
        canon = tuple(sorted(((c, m) for m, c in merged.items() if c != 0.0), key=lambda t: t[1]))
        object.__setattr__(self, "terms", canon)

    @classmethod
    def constant(cls, value: float) -> PolynomialValuation:
        return cls([(value, ())])

    @classmethod
    def monomial(cls, coeff: float, exponents: Mapping[int, int] | Iterable[int]) -> PolynomialValuation:
        """One term; ``exponents`` may be a mapping or an iterable of agent ids (each to the power 1)."""
        if not isinstance(exponents, Mapping):
            counts: dict[int, int] = {}
            for j in exponents:
                counts[j] = counts.get(j, 0) + 1
            exponents = counts
        return cls([(coeff, exponents)])

    @classmethod
    def linear(cls, weights: Mapping[int, float] | Sequence[float], constant: float = 0.0) -> PolynomialValuation:
        items = weights.items() if isinstance(weights, Mapping) else enumerate(weights)
        return cls([(constant, ())] + [(w, {j: 1}) for j, w in items])

    @classmethod
    def product(cls, agents: Iterable[int], coeff: float = 1.0) -> PolynomialValuation:
        return cls.monomial(coeff, list(agents))

    def __call__(self, p: Sequence[float]) -> float:
        total = 0.0
        for coeff, mono in self.terms:
            t = coeff
            for j, e in mono:
                t *= p[j] if e == 1 else p[j] ** e
            total += t
        return total

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorised evaluation over the rows of ``points``."""
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[0])
        for coeff, mono in self.terms:
            t = np.full(points.shape[0], coeff)
            for j, e in mono:
                t = t * points[:, j] ** e
            out += t
        return out

    @property
    def variables(self) -> frozenset[int]:
        return frozenset(j for _, mono in self.terms for j, _ in mono)

    def degree_in(self, j: int) -> int:
        return max((e for _, mono in self.terms for k, e in mono if k == j), default=0)

    @property
    def is_multilinear(self) -> bool:
        return all(e <= 1 for _, mono in self.terms for _, e in mono)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def scaled(self, factor: float) -> PolynomialValuation:
        return PolynomialValuation([(c * factor, m) for c, m in self.terms])

    def __add__(self, other: PolynomialValuation) -> PolynomialValuation:
        return PolynomialValuation(self.terms + other.terms)

    def to_json(self) -> list[dict[str, Any]]:
        return [{"coeff": c, "exponents": {str(j): e for j, e in mono}} for c, mono in self.terms]

    @classmethod
    def from_json(cls, data: Any, where: str = "valuation") -> PolynomialValuation:
        if not isinstance(data, list):
            raise ScenarioError(f"{where}: expected an array of terms")
        terms = []
        for term in data:
            if not isinstance(term, dict):
                raise ScenarioError(f"{where}: each term must be an object")
            _reject_unknown(term, {"coeff", "exponents"}, where)
            if "coeff" not in term:
                raise ScenarioError(f"{where}: term without 'coeff'")
            exponents = term.get("exponents", {})
            if not isinstance(exponents, dict):
                raise ScenarioError(f"{where}: 'exponents' must be an object")
            terms.append((_number(term["coeff"], where), {_agent_key(k, where): v for k, v in exponents.items()}))
        return cls(terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for c, mono in self.terms:
            factors = [f"p{j}" if e == 1 else f"p{j}^{e}" for j, e in mono]
            if not factors:
                parts.append(f"{c:g}")
            elif c == 1.0:
                parts.append("*".join(factors))
            else:
                parts.append(f"{c:g}*" + "*".join(factors))
        return " + ".join(parts)


ZERO = PolynomialValuation()


def eval_valuation(v: PolynomialValuation, p: Sequence[float]) -> float:
    """Evaluate ``v`` at the probability vector ``p`` (indexed by agent id).

    Raises :class:`ScenarioError` if an entry of ``p`` lies outside [0, 1] or
    the vector is too short for the variables ``v`` references.
    """
    for j, x in enumerate(p):
        if not 0.0 <= x <= 1.0:
            raise ScenarioError(f"probability outside [0,1]: p[{j}] = {x}")
    if v.variables and max(v.variables) >= len(p):
        raise ScenarioError(f"valuation references agent {max(v.variables)} but p has length {len(p)}")
    return v(p)


@dataclass(frozen=True)
class Allocation:
    """One outcome: ``tasks[i]`` is the (possibly empty) task set of agent ``i``."""

    id: str
    tasks: tuple[frozenset[str], ...]

    def assigns(self, agent: int) -> bool:
        return bool(self.tasks[agent])

    @property
    def is_null(self) -> bool:
        return not any(self.tasks)

    @classmethod
    def build(cls, id: str, n: int, tasks: Mapping[int, Iterable[str]] | None = None) -> Allocation:
        """``Allocation.build("tau", 2, {0: ["S->A"], 1: ["A->D"]})``; unlisted agents get no tasks."""
        tasks = tasks or {}
        return cls(id, tuple(frozenset(tasks.get(i, ())) for i in range(n)))


@dataclass(frozen=True)
class AgentType:
    """An agent's type: a valuation per allocation plus either PoS or a trust row.

    In plain mode ``pos[tau]`` is the agent's own PoS.  In trust mode
    ``trust_row[tau][j]`` is the agent's opinion of how likely ``j`` is to
    complete ``j``'s tasks in ``tau``.
    """

    valuations: Mapping[str, PolynomialValuation]
    pos: Mapping[str, float] | None = None
    trust_row: Mapping[str, tuple[float, ...]] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "valuations", dict(self.valuations))
        if self.pos is not None:
            object.__setattr__(self, "pos", {k: float(x) for k, x in self.pos.items()})
        if self.trust_row is not None:
            object.__setattr__(self, "trust_row", {k: tuple(float(x) for x in row) for k, row in self.trust_row.items()})

    @property
    def mode(self) -> str:
        return TRUST if self.trust_row is not None else PLAIN

    def with_pos(self, allocation: str, value: float) -> AgentType:
        return replace(self, pos={**self.pos, allocation: value})

    def with_opinion(self, allocation: str, about: int, value: float) -> AgentType:
        row = list(self.trust_row[allocation])
        row[about] = value
        return replace(self, trust_row={**self.trust_row, allocation: tuple(row)})

    def with_valuation(self, allocation: str, valuation: PolynomialValuation) -> AgentType:
        return replace(self, valuations={**self.valuations, allocation: valuation})

    def scaled(self, allocation: str, factor: float) -> AgentType:
        return self.with_valuation(allocation, self.valuations[allocation].scaled(factor))


@dataclass(frozen=True)
class Scenario:
    """The full game (N, T, true types) plus the aggregation table in trust mode.

    Construct raw instances freely, then pass them through
    :func:`validate_scenario`; every other function assumes a validated one.
    """

    agents: tuple[int, ...]
    allocations: tuple[Allocation, ...]
    true_types: Mapping[int, AgentType]
    mode: str = PLAIN
    aggregation: Mapping[int, Mapping[str, PolynomialValuation]] | None = None
    name: str = ""
    _positions: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "allocations", tuple(self.allocations))
        object.__setattr__(self, "true_types", dict(self.true_types))
        if self.aggregation is not None:
            object.__setattr__(self, "aggregation", {i: dict(f) for i, f in self.aggregation.items()})
        object.__setattr__(self, "_positions", {a.id: k for k, a in enumerate(self.allocations)})

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def allocation_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.allocations)

    def allocation(self, allocation_id: str) -> Allocation:
        try:
            return self.allocations[self._positions[allocation_id]]
        except KeyError:
            raise ScenarioError(f"unknown allocation id {allocation_id!r}") from None

    def position(self, allocation_id: str) -> int:
        self.allocation(allocation_id)
        return self._positions[allocation_id]

    @property
    def null_allocation(self) -> Allocation:
        return next(a for a in self.allocations if a.is_null)

    def truthful_reports(self) -> TypeReportProfile:
        return TypeReportProfile(self.true_types)

    def with_true_type(self, agent: int, agent_type: AgentType) -> Scenario:
        return replace(self, true_types={**self.true_types, agent: agent_type})


@dataclass(frozen=True)
class TypeReportProfile:
    """The reported types submitted to a mechanism, keyed by agent id."""

    reports: Mapping[int, AgentType]

    def __post_init__(self) -> None:
        object.__setattr__(self, "reports", dict(sorted(self.reports.items())))

    def __getitem__(self, agent: int) -> AgentType:
        return self.reports[agent]

    def __contains__(self, agent: object) -> bool:
        return agent in self.reports

    def __len__(self) -> int:
        return len(self.reports)

    @property
    def agents(self) -> tuple[int, ...]:
        return tuple(self.reports)

    def replace(self, agent: int, agent_type: AgentType) -> TypeReportProfile:
        return TypeReportProfile({**self.reports, agent: agent_type})


def restrict_reports(profile: TypeReportProfile, excluded: int) -> TypeReportProfile:
    """Drop ``excluded``'s report (the profile of everyone but that agent)."""
    if excluded not in profile:
        raise ScenarioError(f"agent {excluded} is not in the report profile")
    return TypeReportProfile({i: t for i, t in profile.reports.items() if i != excluded})


def validation_points(
    variables: Iterable[int],
    n: int,
    step: float = 0.25,
    n_random: int = 32,
    seed: int = 0,
    max_grid_vars: int = 8,
) -> np.ndarray:
    """Evaluation points used by the range, multilinearity and IR checks.

    A full grid with spacing ``step`` over ``variables`` (other coordinates
    held at 0), then ``n_random`` seeded uniform points over all of
    ``[0,1]^n``.  Past ``max_grid_vars`` variables the grid is replaced by
    the hypercube vertices.
    """
    variables = sorted(set(variables))
    k = len(variables)
    levels = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    if k > max_grid_vars:
        levels = np.array([0.0, 1.0])
    grid = np.zeros((len(levels) ** k, max(n, 1)))
    if k:
        mesh = np.meshgrid(*([levels] * k), indexing="ij")
        for col, axis in zip(variables, mesh):
            grid[:, col] = axis.ravel()
    rng = np.random.default_rng(seed)
    rand = rng.random((n_random, max(n, 1)))
    return np.vstack([grid, rand])[:, :n] if n else np.zeros((1, 0))


def _check_probability(x: float, where: str) -> float:
    if not isinstance(x, (int, float)) or isinstance(x, bool) or not math.isfinite(x):
        raise ScenarioError(f"{where}: probability must be a finite number, got {x!r}")
    if not 0.0 <= x <= 1.0:
        raise ScenarioError(f"probability outside [0,1]: {where} = {x}")
    return float(x)


def _unique_null_id(ids: set[str]) -> str:
    if NULL_ALLOCATION_ID not in ids:
        return NULL_ALLOCATION_ID
    k = 1
    while f"{NULL_ALLOCATION_ID}_{k}" in ids:
        k += 1
    return f"{NULL_ALLOCATION_ID}_{k}"


def validate_scenario(raw: Scenario) -> Scenario:
    """Check every scenario invariant and return the canonical scenario.

    Canonicalisation appends a null allocation (all task sets empty, zero
    valuations) when none exists and orders every per-allocation mapping by
    the declared allocation order.  Idempotent.
    """
    n = len(raw.agents)
    if n < 1:
        raise ScenarioError("a scenario needs at least one agent")
    if tuple(raw.agents) != tuple(range(n)):
        raise ScenarioError(f"agent ids must be 0..{n - 1} in order, got {list(raw.agents)}")
    if raw.mode not in MODES:
        raise ScenarioError(f"unknown mode {raw.mode!r}")
    if not raw.allocations:
        raise ScenarioError("allocation space is empty")

    ids: list[str] = []
    for alloc in raw.allocations:
        if not isinstance(alloc.id, str) or not alloc.id:
            raise ScenarioError(f"allocation id must be a non-empty string, got {alloc.id!r}")
        if alloc.id in ids:
            raise ScenarioError(f"duplicate allocation id {alloc.id!r}")
        if len(alloc.tasks) != n:
            raise ScenarioError(f"allocation {alloc.id!r} lists task sets for {len(alloc.tasks)} agents, expected {n}")
        ids.append(alloc.id)

    if set(raw.true_types) != set(raw.agents):
        raise ScenarioError(f"types given for agents {sorted(raw.true_types)}, expected {list(raw.agents)}")

    allocations = list(raw.allocations)
    types = {i: raw.true_types[i] for i in raw.agents}
    aggregation = raw.aggregation
    if raw.mode == PLAIN and aggregation is not None:
        raise ScenarioError("plain mode forbids an aggregation table")
    if raw.mode == TRUST and aggregation is None:
        raise ScenarioError("trust mode requires an aggregation table")

    if not any(a.is_null for a in allocations):
        null_id = _unique_null_id(set(ids))
        allocations.append(Allocation(null_id, tuple(frozenset() for _ in range(n))))
        ids.append(null_id)
        for i, t in types.items():
            vals = {**t.valuations, null_id: ZERO}
            if raw.mode == PLAIN:
                types[i] = AgentType(vals, pos={**(t.pos or {}), null_id: 1.0}, trust_row=t.trust_row)
            else:
                types[i] = AgentType(vals, pos=t.pos, trust_row={**(t.trust_row or {}), null_id: (1.0,) * n})
        aggregation = {i: {**aggregation.get(i, {}), null_id: PolynomialValuation.monomial(1.0, [i])}
                       for i in raw.agents} if aggregation is not None else None

    id_set = set(ids)
    canon_types = {}
    for i in raw.agents:
        canon_types[i] = _validate_type(types[i], i, ids, id_set, n, raw.mode)

    canon_agg = None
    if raw.mode == TRUST:
        canon_agg = _validate_aggregation(aggregation, ids, id_set, n)

    return Scenario(tuple(range(n)), tuple(allocations), canon_types, raw.mode, canon_agg, raw.name)


def _validate_type(t: AgentType, i: int, ids: list[str], id_set: set[str], n: int, mode: str) -> AgentType:
    missing = id_set - set(t.valuations)
    if missing:
        raise ScenarioError(f"missing valuation entry for agent {i}, allocation(s) {sorted(missing)}")
    extra = set(t.valuations) - id_set
    if extra:
        raise ScenarioError(f"agent {i} has valuations for unknown allocation(s) {sorted(extra)}")
    for a, v in t.valuations.items():
        if not isinstance(v, PolynomialValuation):
            raise ScenarioError(f"agent {i} valuation for {a!r} is not a PolynomialValuation")
        if v.variables and max(v.variables) >= n:
            raise ScenarioError(f"agent {i} valuation for {a!r} references unknown agent {max(v.variables)}")
    valuations = {a: t.valuations[a] for a in ids}

    if mode == PLAIN:
        if t.trust_row is not None:
            raise ScenarioError(f"plain mode forbids trust rows (agent {i})")
        if t.pos is None:
            raise ScenarioError(f"missing PoS entries for agent {i}")
        missing = id_set - set(t.pos)
        if missing:
            raise ScenarioError(f"missing PoS entry for agent {i}, allocation(s) {sorted(missing)}")
        extra = set(t.pos) - id_set
        if extra:
            raise ScenarioError(f"agent {i} has PoS for unknown allocation(s) {sorted(extra)}")
        pos = {a: _check_probability(t.pos[a], f"agent {i} pos[{a}]") for a in ids}
        return AgentType(valuations, pos=pos)

    if t.pos is not None:
        raise ScenarioError(f"trust mode forbids plain PoS entries (agent {i}); use trust_row")
    if t.trust_row is None:
        raise ScenarioError(f"trust mode requires a trust row for agent {i}")
    missing = id_set - set(t.trust_row)
    if missing:
        raise ScenarioError(f"missing trust row for agent {i}, allocation(s) {sorted(missing)}")
    extra = set(t.trust_row) - id_set
    if extra:
        raise ScenarioError(f"agent {i} has trust rows for unknown allocation(s) {sorted(extra)}")
    rows = {}
    for a in ids:
        row = t.trust_row[a]
        if len(row) != n:
            raise ScenarioError(f"agent {i} trust_row[{a}] has length {len(row)}, expected {n}")
        rows[a] = tuple(_check_probability(x, f"agent {i} trust_row[{a}][{j}]") for j, x in enumerate(row))
    return AgentType(valuations, trust_row=rows)


def _validate_aggregation(aggregation, ids, id_set, n) -> dict[int, dict[str, PolynomialValuation]]:
    out: dict[int, dict[str, PolynomialValuation]] = {}
    if set(aggregation) != set(range(n)):
        raise ScenarioError(f"aggregation must cover agents 0..{n - 1}, got {sorted(aggregation)}")
    for i in range(n):
        spec = aggregation[i]
        missing = id_set - set(spec)
        if missing:
            raise ScenarioError(f"missing aggregation for agent {i}, allocation(s) {sorted(missing)}")
        extra = set(spec) - id_set
        if extra:
            raise ScenarioError(f"aggregation for agent {i} names unknown allocation(s) {sorted(extra)}")
        out[i] = {}
        for a in ids:
            f = spec[a]
            if not isinstance(f, PolynomialValuation):
                raise ScenarioError(f"aggregation for agent {i}, {a!r} is not a PolynomialValuation")
            if f.variables and max(f.variables) >= n:
                raise ScenarioError(f"aggregation for agent {i}, {a!r} references unknown agent {max(f.variables)}")
            values = f.evaluate_many(validation_points(f.variables, n))
            lo, hi = float(values.min()), float(values.max())
            if lo < -AGGREGATION_TOL or hi > 1.0 + AGGREGATION_TOL:
                raise ScenarioError(
                    f"aggregation for agent {i}, {a!r} leaves [0,1] on the validation grid (range {lo:g}..{hi:g})"
                )
            out[i][a] = f
    return out


def validate_reports(scenario: Scenario, profile: TypeReportProfile) -> TypeReportProfile:
    """Check a (possibly partial) report profile against the scenario's allocation space and mode."""
    ids = list(scenario.allocation_ids)
    id_set = set(ids)
    checked = {}
    for i, t in profile.reports.items():
        if i not in scenario.agents:
            raise ScenarioError(f"report for unknown agent {i}")
        checked[i] = _validate_type(t, i, ids, id_set, scenario.n, scenario.mode)
    return TypeReportProfile(checked)


# --------------------------------------------------------------------------
# JSON serialisation

_TOP_KEYS = {"agents", "allocations", "mode", "types", "aggregation", "name"}


def _reject_unknown(obj: Mapping, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {sorted(unknown)}")


def _agent_key(key: Any, where: str) -> int:
    if isinstance(key, bool):
        raise ScenarioError(f"{where}: agent id must be an integer, got {key!r}")
    if isinstance(key, int):
        return key
    if isinstance(key, str) and key.isdigit():
        return int(key)
    raise ScenarioError(f"{where}: agent id must be an integer, got {key!r}")


def _number(x: Any, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _agent_type_from_json(data: Any, where: str) -> AgentType:
    if not isinstance(data, dict):
        raise ScenarioError(f"{where}: expected an object")
    _reject_unknown(data, {"valuations", "pos", "trust_row"}, where)
    if "valuations" not in data or not isinstance(data["valuations"], dict):
        raise ScenarioError(f"{where}: missing 'valuations' object")
    valuations = {a: PolynomialValuation.from_json(v, f"{where}.valuations[{a}]") for a, v in data["valuations"].items()}
    pos = trust = None
    if "pos" in data:
        if not isinstance(data["pos"], dict):
            raise ScenarioError(f"{where}.pos: expected an object")
        pos = {a: _number(x, f"{where}.pos[{a}]") for a, x in data["pos"].items()}
    if "trust_row" in data:
        if not isinstance(data["trust_row"], dict):
            raise ScenarioError(f"{where}.trust_row: expected an object")
        trust = {}
        for a, row in data["trust_row"].items():
            if not isinstance(row, list):
                raise ScenarioError(f"{where}.trust_row[{a}]: expected an array")
            trust[a] = tuple(_number(x, f"{where}.trust_row[{a}]") for x in row)
    return AgentType(valuations, pos=pos, trust_row=trust)


def type_from_dict(data: Any, where: str = "type") -> AgentType:
    """Parse one agent type in the scenario-file ``types`` entry format (unvalidated)."""
    return _agent_type_from_json(data, where)


def scenario_from_dict(data: Any) -> Scenario:
    """Parse and validate a scenario document (see ``docs/scenario_schema.md``)."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be a JSON object")
    _reject_unknown(data, _TOP_KEYS, "scenario")
    for key in ("agents", "allocations", "types"):
        if key not in data:
            raise ScenarioError(f"scenario: missing required key {key!r}")
    if not isinstance(data["agents"], list):
        raise ScenarioError("scenario.agents: expected an array")
    agents = tuple(_agent_key(a, "scenario.agents") for a in data["agents"])
    mode = data.get("mode", PLAIN)

    allocations = []
    if not isinstance(data["allocations"], list):
        raise ScenarioError("scenario.allocations: expected an array")
    for k, entry in enumerate(data["allocations"]):
        where = f"scenario.allocations[{k}]"
        if not isinstance(entry, dict):
            raise ScenarioError(f"{where}: expected an object")
        _reject_unknown(entry, {"id", "tasks"}, where)
        if "id" not in entry or "tasks" not in entry or not isinstance(entry["tasks"], dict):
            raise ScenarioError(f"{where}: needs 'id' and a 'tasks' object")
        tasks = {_agent_key(a, where): labels for a, labels in entry["tasks"].items()}
        if set(tasks) != set(agents):
            raise ScenarioError(f"{where}: 'tasks' must have a key for every agent {list(agents)}")
        for a, labels in tasks.items():
            if not isinstance(labels, list) or not all(isinstance(s, str) for s in labels):
                raise ScenarioError(f"{where}.tasks[{a}]: expected an array of strings")
        allocations.append(Allocation(entry["id"], tuple(frozenset(tasks[i]) for i in sorted(tasks))))

    if not isinstance(data["types"], dict):
        raise ScenarioError("scenario.types: expected an object")
    types = {_agent_key(i, "scenario.types"): _agent_type_from_json(t, f"scenario.types[{i}]")
             for i, t in data["types"].items()}

    aggregation = None
    if data.get("aggregation") is not None:
        agg = data["aggregation"]
        if not isinstance(agg, dict):
            raise ScenarioError("scenario.aggregation: expected an object")
        aggregation = {}
        for i, per_alloc in agg.items():
            if not isinstance(per_alloc, dict):
                raise ScenarioError(f"scenario.aggregation[{i}]: expected an object")
            aggregation[_agent_key(i, "scenario.aggregation")] = {
                a: PolynomialValuation.from_json(f, f"scenario.aggregation[{i}][{a}]") for a, f in per_alloc.items()
            }
    return validate_scenario(Scenario(agents, tuple(allocations), types, mode, aggregation, data.get("name", "")))


def type_to_dict(t: AgentType) -> dict[str, Any]:
    out: dict[str, Any] = {"valuations": {a: v.to_json() for a, v in t.valuations.items()}}
    if t.pos is not None:
        out["pos"] = dict(t.pos)
    if t.trust_row is not None:
        out["trust_row"] = {a: list(row) for a, row in t.trust_row.items()}
    return out


def scenario_to_dict(scenario: Scenario) -> dict[str, Any]:
    out: dict[str, Any] = {
        "agents": list(scenario.agents),
        "allocations": [
            {"id": a.id, "tasks": {str(i): sorted(a.tasks[i]) for i in scenario.agents}} for a in scenario.allocations
        ],
        "mode": scenario.mode,
        "types": {str(i): type_to_dict(t) for i, t in scenario.true_types.items()},
    }
    if scenario.aggregation is not None:
        out["aggregation"] = {str(i): {a: f.to_json() for a, f in spec.items()} for i, spec in scenario.aggregation.items()}
    if scenario.name:
        out["name"] = scenario.name
    return out


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(data)


def dump_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n")
