"""Bundled scenarios and scenario families, addressable as ``bundled:NAME``.

Agents are numbered from 0.  The classic two-agent relay example is
``table1``: agent 0 may carry a package S->A and agent 1 A->D, or agent 1
carries it S->D alone.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping

from .model import (
    PLAIN,
    TRUST,
    AgentType,
    Allocation,
    PolynomialValuation,
    Scenario,
    ScenarioError,
    validate_scenario,
)
from .verify import ScenarioFamily, TuneParameter


def poly(*terms: tuple) -> PolynomialValuation:
    """``poly((1.0, 0, 1), (-0.2,))`` is ``p0*p1 - 0.2``; repeat an id for powers."""
    return sum((PolynomialValuation.monomial(t[0], t[1:]) for t in terms), PolynomialValuation())


def _build(
    name: str,
    n: int,
    allocations: list[tuple[str, Mapping[int, list[str]]]],
    valuations: Mapping[int, Mapping[str, PolynomialValuation]],
    pos: Mapping[int, Mapping[str, float]] | None = None,
    trust: Mapping[int, Mapping[str, tuple[float, ...]]] | None = None,
    aggregation: Callable[[int, str], PolynomialValuation] | None = None,
) -> Scenario:
    allocs = tuple(Allocation.build(a, n, tasks) for a, tasks in allocations)
    ids = [a.id for a in allocs]
    types = {}
    for i in range(n):
        vals = {a: valuations.get(i, {}).get(a, PolynomialValuation()) for a in ids}
        if trust is None:
            # empty-task agents default to PoS 0 (it never matters for their valuations here)
            p = {a: (pos or {}).get(i, {}).get(a, 0.0) for a in ids}
            types[i] = AgentType(vals, pos=p)
        else:
            types[i] = AgentType(vals, trust_row={a: trust[i][a] for a in ids})
    agg = None
    if aggregation is not None:
        agg = {i: {a: aggregation(i, a) for a in ids} for i in range(n)}
    mode = TRUST if trust is not None else PLAIN
    return validate_scenario(Scenario(tuple(range(n)), allocs, types, mode, agg, name))


# --------------------------------------------------------------------------
# Plain-mode scenarios


def table1() -> Scenario:
    return _build(
        "table1",
        2,
        [("tau", {0: ["S->A"], 1: ["A->D"]}), ("tau_prime", {1: ["S->D"]})],
        {1: {"tau": poly((1.0, 0, 1)), "tau_prime": poly((1.0, 1))}},
        pos={0: {"tau": 0.0, "tau_prime": 0.0}, 1: {"tau": 1.0, "tau_prime": 0.5}},
    )


def table1_squared() -> Scenario:
    """Agent 1's relay value is quadratic in agent 0's PoS (not multilinear)."""
    s = table1()
    t = s.true_types[1].with_valuation("tau", poly((1.0, 0, 0, 1)))
    return validate_scenario(Scenario(s.agents, s.allocations, {**s.true_types, 1: t}, name="table1_squared"))


def delivery_relay() -> Scenario:
    """Agent 2 owns a package; it can go by a two-hop relay, a three-hop relay or directly."""
    return _build(
        "delivery_relay",
        3,
        [
            ("relay", {0: ["S->A"], 1: ["A->D"]}),
            ("relay3", {0: ["S->A"], 1: ["A->B"], 2: ["B->D"]}),
            ("direct", {2: ["S->D"]}),
        ],
        {
            0: {"relay": poly((-0.1,)), "relay3": poly((-0.1,))},
            1: {"relay": poly((-0.15,)), "relay3": poly((-0.05,))},
            2: {"relay": poly((1.0, 0, 1)), "relay3": poly((1.0, 0, 1, 2), (-0.05,)), "direct": poly((1.0, 2), (-0.3,))},
        },
        pos={
            0: {"relay": 0.9, "relay3": 0.9},
            1: {"relay": 0.7, "relay3": 0.95},
            2: {"relay3": 0.9, "direct": 0.6},
        },
    )


def ride_sharing() -> Scenario:
    """Driver 0 may pick up rider 1, rider 2 or both; riders must show up."""
    return _build(
        "ride_sharing",
        3,
        [
            ("pick_1", {0: ["drive"], 1: ["show_up"]}),
            ("pick_2", {0: ["drive"], 2: ["show_up"]}),
            ("pick_both", {0: ["drive"], 1: ["show_up"], 2: ["show_up"]}),
        ],
        {
            0: {
                "pick_1": poly((0.6, 1), (-0.3,)),
                "pick_2": poly((0.5, 2), (-0.3,)),
                "pick_both": poly((0.5, 1), (0.4, 2), (-0.5,)),
            },
            1: {"pick_1": poly((0.8, 0, 1)), "pick_both": poly((0.7, 0, 1))},
            2: {"pick_2": poly((0.9, 0, 2)), "pick_both": poly((0.6, 0, 2))},
        },
        pos={
            0: {"pick_1": 0.9, "pick_2": 0.85, "pick_both": 0.8},
            1: {"pick_1": 0.7, "pick_both": 0.7},
            2: {"pick_2": 0.95, "pick_both": 0.9},
        },
    )


def independent_tasks() -> Scenario:
    """Requester 3 has two independent tasks t1, t2 and three candidate workers."""
    return _build(
        "independent_tasks",
        4,
        [
            ("team01", {0: ["t1"], 1: ["t2"]}),
            ("team12", {1: ["t1"], 2: ["t2"]}),
            ("solo2", {2: ["t1"]}),
        ],
        {
            0: {"team01": poly((-0.2,))},
            1: {"team01": poly((-0.1,)), "team12": poly((-0.25,))},
            2: {"team12": poly((-0.1,)), "solo2": poly((-0.15,))},
            3: {
                "team01": poly((1.0, 0), (0.8, 1)),
                "team12": poly((1.0, 1), (0.8, 2)),
                "solo2": poly((1.0, 2)),
            },
        },
        pos={
            0: {"team01": 0.6},
            1: {"team01": 0.9, "team12": 0.75},
            2: {"team12": 0.85, "solo2": 0.8},
        },
    )


def public_good() -> Scenario:
    """A facility gets built if any assigned builder succeeds; everyone enjoys it."""
    either01 = poly((1.0, 0), (1.0, 1), (-1.0, 0, 1))
    return _build(
        "public_good",
        3,
        [
            ("build_0", {0: ["build"]}),
            ("build_1", {1: ["build"]}),
            ("build_01", {0: ["build"], 1: ["build"]}),
            ("build_2", {2: ["build"]}),
        ],
        {
            0: {"build_0": poly((0.5, 0), (-0.2,)), "build_1": poly((0.5, 1)),
                "build_01": either01.scaled(0.5) + poly((-0.2,)), "build_2": poly((0.5, 2))},
            1: {"build_0": poly((0.4, 0)), "build_1": poly((0.4, 1), (-0.25,)),
                "build_01": either01.scaled(0.4) + poly((-0.25,)), "build_2": poly((0.4, 2))},
            2: {"build_0": poly((0.3, 0)), "build_1": poly((0.3, 1)),
                "build_01": either01.scaled(0.3), "build_2": poly((0.3, 2), (-0.35,))},
        },
        pos={
            0: {"build_0": 0.6, "build_01": 0.6},
            1: {"build_1": 0.7, "build_01": 0.7},
            2: {"build_2": 0.9},
        },
    )


def ir_violation() -> Scenario:
    """Agent 0 has no task in ``tau`` yet dislikes agent 1 completing it."""
    return _build(
        "ir_violation",
        2,
        [("tau", {1: ["task"]}), ("tau_0", {0: ["task"]})],
        {0: {"tau": poly((-1.0, 1)), "tau_0": poly((0.2, 0))}, 1: {"tau": poly((1.5, 1))}},
        pos={0: {"tau_0": 0.5}, 1: {"tau": 1.0}},
    )


def concave_reward() -> Scenario:
    """Agent 0's reward ``2p - p^2`` is concave in its own PoS; agent 1 is a sure backup."""
    return _build(
        "concave_reward",
        2,
        [("solo", {0: ["task"]}), ("backup", {1: ["task"]})],
        {0: {"solo": poly((2.0, 0), (-1.0, 0, 0))}, 1: {"backup": poly((0.6, 1))}},
        pos={0: {"solo": 0.5}, 1: {"backup": 1.0}},
    )


def relay_squared() -> Scenario:
    """Three agents; the recipient's relay value is ``p0 * p1^2``."""
    return _build(
        "relay_squared",
        3,
        [("relay", {0: ["S->A"], 1: ["A->D"]}), ("direct", {2: ["S->D"]})],
        {2: {"relay": poly((1.0, 0, 1, 1)), "direct": poly((0.5, 2))}},
        pos={0: {"relay": 1.0}, 1: {"relay": 0.5}, 2: {"direct": 1.0}},
    )


# --------------------------------------------------------------------------
# Trust-mode scenarios

_TRUST_ALLOCS = [("tau", {0: ["S->A"], 1: ["A->D"]}), ("tau_prime", {1: ["S->D"]})]
_TRUST_VALS = {1: {"tau": poly((1.0, 0, 1)), "tau_prime": poly((0.5, 1))}}
_TRUST_ROWS = {
    0: {"tau": (0.8, 0.8), "tau_prime": (1.0, 1.0)},
    1: {"tau": (0.6, 0.9), "tau_prime": (0.5, 0.7)},
}


def trust_weighted() -> Scenario:
    """Linear aggregation ``rho_i = 0.6 p_{0,i} + 0.4 p_{1,i}``."""
    return _build(
        "trust_weighted", 2, _TRUST_ALLOCS, _TRUST_VALS, trust=_TRUST_ROWS,
        aggregation=lambda i, a: poly((0.6, 0), (0.4, 1)),
    )


def trust_product() -> Scenario:
    """Product aggregation ``rho_i = p_{0,i} p_{1,i}`` (multilinear, not linear)."""
    return _build(
        "trust_product", 2, _TRUST_ALLOCS, _TRUST_VALS, trust=_TRUST_ROWS,
        aggregation=lambda i, a: poly((1.0, 0, 1)),
    )


def trust_squared() -> Scenario:
    """Non-multilinear aggregation ``rho_i = p_{0,i}^2``."""
    return _build(
        "trust_squared", 2, _TRUST_ALLOCS, _TRUST_VALS, trust=_TRUST_ROWS,
        aggregation=lambda i, a: poly((1.0, 0, 0)),
    )


def trust_self() -> Scenario:
    """Three agents who only trust themselves (``rho_i = p_{i,i}``), i.e. plain PEV in disguise."""
    rows = {
        0: {"relay": (0.9, 0.0, 0.0), "direct": (0.0, 0.0, 0.0)},
        1: {"relay": (0.0, 0.7, 0.0), "direct": (0.0, 0.0, 0.0)},
        2: {"relay": (0.0, 0.0, 0.0), "direct": (0.0, 0.0, 0.6)},
    }
    return _build(
        "trust_self",
        3,
        [("relay", {0: ["S->A"], 1: ["A->D"]}), ("direct", {2: ["S->D"]})],
        {2: {"relay": poly((1.0, 0, 1)), "direct": poly((1.0, 2))}},
        trust=rows,
        aggregation=lambda i, a: poly((1.0, i)),
    )


def trust_mixed() -> Scenario:
    """Three agents, weighted aggregation for the first relay hop and product for the second."""
    rows = {
        0: {"relay": (0.9, 0.6, 0.5), "direct": (0.5, 0.5, 0.7)},
        1: {"relay": (0.7, 0.8, 0.5), "direct": (0.5, 0.5, 0.6)},
        2: {"relay": (0.8, 0.9, 0.5), "direct": (0.5, 0.5, 0.9)},
    }

    def agg(i: int, a: str) -> PolynomialValuation:
        if i == 1:
            return poly((1.0, 0, 1, 2))
        return poly((0.5, 0), (0.25, 1), (0.25, 2))

    return _build(
        "trust_mixed",
        3,
        [("relay", {0: ["S->A"], 1: ["A->D"]}), ("direct", {2: ["S->D"]})],
        {2: {"relay": poly((1.0, 0, 1)), "direct": poly((0.8, 2))}},
        trust=rows,
        aggregation=agg,
    )


BUNDLED: dict[str, Callable[[], Scenario]] = {
    "table1": table1,
    "table1_squared": table1_squared,
    "delivery_relay": delivery_relay,
    "ride_sharing": ride_sharing,
    "independent_tasks": independent_tasks,
    "public_good": public_good,
    "ir_violation": ir_violation,
    "concave_reward": concave_reward,
    "relay_squared": relay_squared,
    "trust_weighted": trust_weighted,
    "trust_product": trust_product,
    "trust_squared": trust_squared,
    "trust_self": trust_self,
    "trust_mixed": trust_mixed,
}

# Plain scenarios with every valuation multilinear
MULTILINEAR = ("table1", "delivery_relay", "ride_sharing", "independent_tasks", "public_good")
NON_MULTILINEAR = ("table1_squared", "concave_reward", "relay_squared")
TRUST_MULTILINEAR = ("trust_weighted", "trust_product", "trust_self", "trust_mixed")


def bundled(name: str) -> Scenario:
    try:
        return BUNDLED[name]()
    except KeyError:
        raise ScenarioError(f"unknown bundled scenario {name!r}; available: {', '.join(BUNDLED)}") from None


# --------------------------------------------------------------------------
# Families: true types tuned over grids, for the manipulation finder


def _family(name: str, base: str, params: tuple[TuneParameter, ...]) -> ScenarioFamily:
    return ScenarioFamily(bundled(base), params, name=name)


FAMILIES: dict[str, Callable[[], ScenarioFamily]] = {
    "table1_squared": lambda: _family(
        "table1_squared",
        "table1_squared",
        (TuneParameter("pos", 0, "tau"), TuneParameter("coeff", 1, "tau_prime", 0)),
    ),
    "concave_reward": lambda: _family(
        "concave_reward",
        "concave_reward",
        (TuneParameter("pos", 0, "solo"), TuneParameter("coeff", 1, "backup", 0)),
    ),
    "relay_squared": lambda: _family(
        "relay_squared",
        "relay_squared",
        (TuneParameter("pos", 1, "relay"), TuneParameter("coeff", 2, "direct", 0)),
    ),
    "table1_multilinear": lambda: _family(
        "table1_multilinear",
        "table1",
        (TuneParameter("pos", 0, "tau"), TuneParameter("coeff", 1, "tau_prime", 0)),
    ),
    "trust_squared": lambda: _family(
        "trust_squared",
        "trust_squared",
        (TuneParameter("opinion", 0, "tau", 0), TuneParameter("coeff", 1, "tau_prime", 0)),
    ),
    "trust_product": lambda: _family(
        "trust_product",
        "trust_product",
        (TuneParameter("opinion", 0, "tau", 0), TuneParameter("coeff", 1, "tau_prime", 0)),
    ),
}

NON_MULTILINEAR_FAMILIES = ("table1_squared", "concave_reward", "relay_squared")


def family(name: str) -> ScenarioFamily:
    try:
        return FAMILIES[name]()
    except KeyError:
        raise ScenarioError(f"unknown scenario family {name!r}; available: {', '.join(FAMILIES)}") from None
