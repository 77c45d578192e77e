"""
Why Groves payments break when tasks can fail
==============================================

Two agents, one package.  Agent 0 can carry it S->A and agent 1 A->D, or
agent 1 carries it S->D alone.  Agent 0 truly never succeeds (PoS 0), but
under Groves payments computed from reports it pays to claim otherwise.
"""

from pevmech import bundled, check_ex_post_truthful, efficient_allocation, expected_utility

s = bundled("table1")
truth = s.truthful_reports()

chosen, ledger = efficient_allocation(s, truth)
print("truthful choice:", chosen, dict(ledger.welfare))

# agent 0 claims PoS 0.6 for the relay
lie = truth.replace(0, truth[0].with_pos("tau", 0.6))
chosen, ledger = efficient_allocation(s, lie)
print("after the lie:  ", chosen, dict(ledger.welfare))

for reports, label in ((truth, "truthful"), (lie, "lying")):
    u = expected_utility(s, s.true_types[0], reports, "groves-zero", 0)
    print(f"agent 0 utility ({label}): {u:.3f}")

# the sweep finds the same lie as the first profitable one on the grid
r = check_ex_post_truthful(s, "groves-zero", agent=0)
print(r.verdict, r.witness_summary, round(r.witness_gain, 12), "best:", r.best_summary, r.max_gain)
