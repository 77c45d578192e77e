"""
Trust: PoS aggregated from everyone's opinions
===============================================

Weighted-sum and product aggregations keep the mechanism truthful; squaring
one opinion does not.
"""

from pevmech import bundled, check_ex_post_truthful, worst_trust_h
from pevmech.welfare import aggregate_pos

for name in ("trust_weighted", "trust_product", "trust_squared"):
    s = bundled(name)
    truth = s.truthful_reports()
    print(name, "rho(tau) =", aggregate_pos(s, truth, "tau"))
    for r in check_ex_post_truthful(s, "pev-trust"):
        print(f"  agent {r.agent}: max gain {r.max_gain:.3f}  first witness {r.witness_summary}")
    print("  worst-trust pivots:", [round(worst_trust_h(s, truth, i), 6) for i in s.agents])
