"""
Multilinearity is necessary
============================

Make agent 1's relay value quadratic in agent 0's PoS.  At the base profile
nobody gains by lying, but tuning agent 0's true PoS and agent 1's direct
route value opens a profitable misreport.
"""

from pevmech import bundled, check_ex_post_truthful, family, find_manipulation
from pevmech.scenarios import NON_MULTILINEAR_FAMILIES
from pevmech.welfare import check_multilinear_valuation

s = bundled("table1_squared")
print(check_multilinear_valuation(s.true_types[1].valuations["tau"], s.n))
print("base profile max gains:", [r.max_gain for r in check_ex_post_truthful(s, "pev")])

for name in NON_MULTILINEAR_FAMILIES:
    w = find_manipulation(family(name), "pev")
    print(f"{name}: profile {dict(w.profile)} agent {w.agent} '{w.summary}' gain {w.gain:.3f}")

print("multilinear control:", find_manipulation(family("table1_multilinear"), "pev"))
