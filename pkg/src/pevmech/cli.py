"""Command-line interface: ``pevmech <command> --scenario <path|bundled:NAME> ...``.

Exit codes: 0 success, 2 invalid input (bad file, schema violation, bad
flag), 3 a check found a violation (manipulation, IR failure or a
non-multilinear function), so scripts can assert negative results too.
"""

from __future__ import annotations

import argparse
import os
import sys
from collections.abc import Sequence
from dataclasses import dataclass, field

from . import scenarios
from .mechanisms import (
    Mechanism,
    check_mechanism_mode,
    expected_outcome,
    pev_payment_breakdown,
    worst_trust_detail,
)
from .model import TRUST, Scenario, ScenarioError, TypeReportProfile, load_scenario, validate_reports
from .report import JSON, TABLE, emit_report
from .verify import (
    DEFAULT_COEFF_SCALES,
    DEFAULT_POS_GRID,
    DeviationSpace,
    ScenarioFamily,
    TuneParameter,
    check_ex_post_truthful,
    check_ir,
    find_manipulation,
    monte_carlo_check,
    run_episode,
)
from .welfare import aggregate_matrix, check_scenario_multilinearity, efficient_allocation, opinion_matrix

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_VIOLATION = 3
DEFAULT_SEED = 42
DEFAULT_REPLICATIONS = 10_000

COMMANDS = (
    "allocate",
    "payments",
    "simulate",
    "verify-truthful",
    "verify-ir",
    "check-multilinear",
    "find-manipulation",
    "aggregate-trust",
)


class UsageError(ValueError):
    """Bad command-line value (reported with exit code 2)."""


@dataclass
class RunConfig:
    command: str
    scenario: str | None = None
    mechanism: str | None = None
    seed: int = DEFAULT_SEED
    replications: int = DEFAULT_REPLICATIONS
    pos_grid: tuple[float, ...] = DEFAULT_POS_GRID
    coeff_scales: tuple[float, ...] = DEFAULT_COEFF_SCALES
    scope: str = "both"
    fmt: str = TABLE
    agent: int | None = None
    overrides: list[str] = field(default_factory=list)
    tune: list[str] = field(default_factory=list)
    family: str | None = None

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.seed < 0:
            raise UsageError("--seed must be a non-negative integer")
        if self.replications < 2:
            raise UsageError("--replications must be at least 2")
        if self.fmt not in (TABLE, JSON):
            raise UsageError(f"--format must be 'table' or 'json', got {self.fmt!r}")
        if self.scenario is None and not (self.command == "find-manipulation" and self.family):
            raise UsageError(f"{self.command} needs --scenario")

    @property
    def space(self) -> DeviationSpace:
        return DeviationSpace(self.pos_grid, self.coeff_scales, self.scope)


def resolve_scenario(ref: str) -> Scenario:
    if ref.startswith("bundled:"):
        return scenarios.bundled(ref[len("bundled:"):])
    return load_scenario(ref)


def _float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("list must be nonempty")
    return values


def _parse_agent(text: str) -> int:
    if not text.isdigit():
        raise UsageError(f"agent id must be a non-negative integer, got {text!r}")
    return int(text)


def apply_overrides(scenario: Scenario, overrides: Sequence[str]) -> TypeReportProfile:
    """Truthful reports with edits ``AGENT:ALLOC=VALUE`` (PoS) or ``AGENT:ALLOC:J=VALUE`` (trust opinion)."""
    reports = scenario.truthful_reports()
    for item in overrides:
        lhs, sep, value = item.partition("=")
        parts = lhs.split(":")
        if not sep or len(parts) not in (2, 3):
            raise UsageError(f"override must look like AGENT:ALLOC=VALUE or AGENT:ALLOC:J=VALUE, got {item!r}")
        agent, alloc = _parse_agent(parts[0]), parts[1]
        if agent not in scenario.agents:
            raise UsageError(f"override names unknown agent {agent}")
        scenario.allocation(alloc)
        try:
            x = float(value)
        except ValueError:
            raise UsageError(f"override value must be a number, got {value!r}") from None
        t = reports[agent]
        if len(parts) == 2:
            if scenario.mode == TRUST:
                raise UsageError("trust-mode overrides need AGENT:ALLOC:J=VALUE")
            t = t.with_pos(alloc, x)
        else:
            if scenario.mode != TRUST:
                raise UsageError("opinion overrides need a trust-mode scenario")
            j = _parse_agent(parts[2])
            if j not in scenario.agents:
                raise UsageError(f"override names unknown agent {j}")
            t = t.with_opinion(alloc, j, x)
        reports = reports.replace(agent, t)
    return validate_reports(scenario, reports)


def parse_tune(text: str) -> TuneParameter:
    """``pos:AGENT:ALLOC``, ``coeff:AGENT:ALLOC:INDEX`` or ``opinion:AGENT:ALLOC:J``."""
    parts = text.split(":")
    if len(parts) < 3 or parts[0] not in ("pos", "coeff", "opinion"):
        raise UsageError(f"--tune must be pos:AGENT:ALLOC, coeff:AGENT:ALLOC:INDEX or opinion:AGENT:ALLOC:J, got {text!r}")
    kind, agent, alloc = parts[0], _parse_agent(parts[1]), parts[2]
    index = _parse_agent(parts[3]) if len(parts) > 3 else 0
    return TuneParameter(kind, agent, alloc, index)


def _default_mechanism(scenario: Scenario, mechanism: str | None) -> Mechanism:
    if mechanism is None:
        return Mechanism.PEV_TRUST if scenario.mode == TRUST else Mechanism.PEV
    return check_mechanism_mode(scenario, mechanism)


def _check_tune(scenario: Scenario, params: Sequence[TuneParameter]) -> None:
    for p in params:
        if p.agent not in scenario.agents:
            raise UsageError(f"tune names unknown agent {p.agent}")
        scenario.allocation(p.allocation)
        if p.kind == "coeff" and p.index >= len(scenario.true_types[p.agent].valuations[p.allocation].terms):
            raise UsageError(f"tune coefficient index {p.index} out of range for agent {p.agent}, {p.allocation}")
        if p.kind == "pos" and scenario.mode == TRUST:
            raise UsageError("trust-mode scenarios tune opinions, not PoS")
        if p.kind == "opinion" and (scenario.mode != TRUST or p.index not in scenario.agents):
            raise UsageError("opinion tuning needs a trust-mode scenario and a valid agent index")


def run(config: RunConfig) -> tuple[int, dict]:
    """Execute one command; returns ``(exit code, report)``."""
    if config.command == "find-manipulation" and config.family and config.scenario is None:
        fam = scenarios.family(config.family)
        scenario = fam.base
    else:
        scenario = resolve_scenario(config.scenario)
        fam = None
    report: dict = {"command": config.command, "scenario": scenario.name or config.scenario}
    code = EXIT_OK
    cmd = config.command

    if cmd == "allocate":
        reports = apply_overrides(scenario, config.overrides)
        chosen, ledger = efficient_allocation(scenario, reports)
        report.update(chosen=chosen, social_welfare=ledger.max_welfare, welfare=ledger)

    elif cmd == "payments":
        mech = _default_mechanism(scenario, config.mechanism)
        reports = apply_overrides(scenario, config.overrides)
        outcome = expected_outcome(scenario, reports, mech)
        rows = []
        for i in scenario.agents:
            row = {"agent": i, "expected_payment": outcome.payments[i], "expected_utility": outcome.utilities[i]}
            if mech.is_pev:
                b = pev_payment_breakdown(scenario, reports, i, chosen=outcome.chosen)
                row.update(h=b.h_i, payment_if_success=b.payment_if_success, payment_if_failure=b.payment_if_failure)
            rows.append(row)
        report.update(mechanism=mech.value, chosen=outcome.chosen, payments=rows)

    elif cmd == "simulate":
        mech = _default_mechanism(scenario, config.mechanism)
        reports = apply_overrides(scenario, config.overrides)
        episode = run_episode(scenario, reports, mech, config.seed)
        mc = monte_carlo_check(scenario, reports, mech, config.replications, config.seed)
        report.update(mechanism=mech.value, seed=config.seed, episode=episode, monte_carlo=mc)

    elif cmd == "verify-truthful":
        mech = _default_mechanism(scenario, config.mechanism)
        if config.agent is not None and config.agent not in scenario.agents:
            raise UsageError(f"unknown agent {config.agent}")
        results = check_ex_post_truthful(scenario, mech, config.space, config.agent)
        results = [results] if config.agent is not None else results
        found = [r for r in results if r.manipulable]
        max_gain = max(r.max_gain for r in results)
        if found:
            w = found[0]
            summary = f"manipulation found: agent {w.agent} gains {w.witness_gain:.10g} with {w.witness_summary}"
            code = EXIT_VIOLATION
        else:
            summary = f"no profitable deviation found, max_gain <= 1e-9 (max_gain = {max_gain:.3g})"
        report.update(mechanism=mech.value, verdict=summary, max_gain=max_gain)
        for r in results:
            report[f"agent_{r.agent}"] = r

    elif cmd == "verify-ir":
        mech = _default_mechanism(scenario, config.mechanism)
        ir = check_ir(scenario, mech, config.space)
        report.update(mechanism=mech.value, ir_violated=ir.violated, ir=ir)
        if ir.violated:
            code = EXIT_VIOLATION

    elif cmd == "check-multilinear":
        ml = check_scenario_multilinearity(scenario)
        rows = []
        for kind, table in (("valuation", ml.valuations), ("aggregation", ml.aggregations)):
            for (i, a), r in table.items():
                w = r.witness
                rows.append(
                    {
                        "kind": kind,
                        "agent": i,
                        "allocation": a,
                        "multilinear": r.is_multilinear,
                        "variable": w.variable if w else None,
                        "point": w.point if w else None,
                        "lhs": w.lhs if w else None,
                        "rhs": w.rhs if w else None,
                    }
                )
        report.update(all_multilinear=ml.all_multilinear, functions=rows)
        if not ml.all_multilinear:
            code = EXIT_VIOLATION

    elif cmd == "find-manipulation":
        mech = _default_mechanism(scenario, config.mechanism)
        if fam is None:
            if config.family:
                fam = scenarios.family(config.family)
                if fam.base.name != scenario.name:
                    raise UsageError("--family and --scenario disagree; give only one")
            else:
                params = tuple(parse_tune(t) for t in config.tune)
                _check_tune(scenario, params)
                fam = ScenarioFamily(scenario, params, name=scenario.name)
        elif config.tune:
            raise UsageError("--tune cannot be combined with --family")
        witness = find_manipulation(fam, mech, config.space)
        report.update(mechanism=mech.value, family=fam.name, found=witness is not None, witness=witness)
        if witness is not None:
            code = EXIT_VIOLATION

    elif cmd == "aggregate-trust":
        if scenario.mode != TRUST:
            raise ScenarioError("aggregate-trust needs a trust-mode scenario")
        truth = scenario.truthful_reports()
        rows = []
        for a in scenario.allocation_ids:
            rho = aggregate_matrix(scenario, opinion_matrix(scenario, truth, a), a)
            rows.append({"allocation": a, **{f"rho_{i}": rho[i] for i in scenario.agents}})
        pivots = []
        for i in scenario.agents:
            h, alloc, row = worst_trust_detail(scenario, truth, i)
            pivots.append({"agent": i, "worst_trust_h": h, "allocation": alloc, "worst_row": row})
        report.update(aggregated_pos=rows, worst_trust=pivots)

    return code, report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pevmech", description="Task-allocation mechanisms with execution uncertainty.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", help="scenario JSON file or bundled:NAME")
        p.add_argument("--mechanism", choices=[m.value for m in Mechanism])
        p.add_argument("--seed", type=int, default=None, help="root seed (default $MECH_SEED or 42)")
        p.add_argument("--replications", type=int, default=DEFAULT_REPLICATIONS)
        p.add_argument("--pos-grid", type=_float_list, default=DEFAULT_POS_GRID)
        p.add_argument("--coeff-scales", type=_float_list, default=DEFAULT_COEFF_SCALES)
        p.add_argument("--scope", choices=["both", "pos", "valuations"], default="both")
        p.add_argument("--format", dest="fmt", choices=[TABLE, JSON], default=TABLE)
        p.add_argument("--agent", type=int, default=None, help="verify-truthful: only this agent")
        p.add_argument("--override-pos", dest="overrides", action="append", default=[],
                       metavar="AGENT:ALLOC[:J]=VALUE", help="edit a report before running (repeatable)")
        p.add_argument("--tune", action="append", default=[], metavar="KIND:AGENT:ALLOC[:INDEX]",
                       help="find-manipulation: tunable true-type entry (repeatable)")
        p.add_argument("--family", help="find-manipulation: bundled family name")
    return parser


def _seed_from(args_seed: int | None) -> int:
    if args_seed is not None:
        return args_seed
    env = os.environ.get("MECH_SEED")
    if env is None or env == "":
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"MECH_SEED must be an integer, got {env!r}") from None


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(
            command=args.command,
            scenario=args.scenario,
            mechanism=args.mechanism,
            seed=_seed_from(args.seed),
            replications=args.replications,
            pos_grid=args.pos_grid,
            coeff_scales=args.coeff_scales,
            scope=args.scope,
            fmt=args.fmt,
            agent=args.agent,
            overrides=args.overrides,
            tune=args.tune,
            family=args.family,
        )
        code, report = run(config)
        text = emit_report(report, config.fmt)
    except (ScenarioError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
