"""
Paying after execution restores truthfulness
=============================================

PEV payments settle on observed success, so over-claiming PoS no longer
pays.  Sweep every bundled multilinear scenario over the default grid.
"""

from pevmech import DeviationSpace, bundled, check_ex_post_truthful, expected_utility, pev_payment_breakdown
from pevmech.scenarios import MULTILINEAR

s = bundled("table1")
truth = s.truthful_reports()
lie = truth.replace(0, truth[0].with_pos("tau", 0.6))
b = pev_payment_breakdown(s, lie, 0)
print("lie picks", b.allocation, "pay on success", b.payment_if_success, "on failure", b.payment_if_failure)
print("agent 0 utility if lying:", expected_utility(s, s.true_types[0], lie, "pev", 0))

space = DeviationSpace()
for name in MULTILINEAR:
    reports = check_ex_post_truthful(bundled(name), "pev", space)
    sizes = [len(r.ledger) for r in reports]
    print(f"{name:18s} max gain {max(r.max_gain for r in reports):.2e}  misreports checked {sizes}")
