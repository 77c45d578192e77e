"""
Individual rationality
=======================

PEV is IR exactly when agents with no tasks never value an outcome
negatively.  A spiteful agent breaks it.
"""

from pevmech import bundled, check_ir
from pevmech.scenarios import MULTILINEAR

for name in MULTILINEAR:
    r = check_ir(bundled(name), "pev")
    print(f"{name:18s} static ok {r.static_ok}  min utility {r.empirical_min_utility:+.3f}")

r = check_ir(bundled("ir_violation"), "pev")
print("ir_violation static witness:", r.static_witness)
print("ir_violation empirical witness:", r.empirical_witness)

# the IR argument also leans on multilinearity: a concave reward fails it
r = check_ir(bundled("concave_reward"), "pev")
print("concave_reward:", r.static_ok, r.empirical_witness)
