"""Efficient task allocation when agents may fail: Groves, PEV and trust-based payments.

Scenarios, welfare and payments live in :mod:`pevmech.model`,
:mod:`pevmech.welfare` and :mod:`pevmech.mechanisms`; exhaustive
truthfulness/IR checks and seeded simulation in :mod:`pevmech.verify`.
"""

from .mechanisms import (
    Mechanism,
    MechanismOutcome,
    PaymentBreakdown,
    expected_outcome,
    expected_payment,
    expected_utility,
    groves_payment,
    interim_outcome,
    pev_h,
    pev_interim_utilities,
    pev_payment_breakdown,
    pev_payment_realized,
    worst_trust_h,
)
from .model import (
    AgentType,
    Allocation,
    PolynomialValuation,
    Scenario,
    ScenarioError,
    TypeReportProfile,
    eval_valuation,
    load_scenario,
    scenario_from_dict,
    scenario_to_dict,
    validate_scenario,
)
from .report import emit_report
from .scenarios import bundled, family
from .verify import (
    DeviationReport,
    DeviationSpace,
    IrReport,
    ScenarioFamily,
    TuneParameter,
    check_ex_post_truthful,
    check_ir,
    check_ir_condition,
    check_ir_empirical,
    find_manipulation,
    monte_carlo_check,
    run_episode,
    simulate_execution,
)
from .welfare import (
    WelfareLedger,
    aggregate_pos,
    check_multilinear_aggregation,
    check_multilinear_valuation,
    efficient_allocation,
    expected_social_welfare,
)

__version__ = "0.1.0"
