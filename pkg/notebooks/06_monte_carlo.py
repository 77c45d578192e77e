"""
Seeded Monte Carlo against the closed form
===========================================

Replication k draws from SeedSequence(root, spawn_key=(k,)), so any episode
can be replayed alone.
"""

import numpy as np

from pevmech import bundled, monte_carlo_check, run_episode
from pevmech.verify import derive_seed

s = bundled("table1")
truth = s.truthful_reports()
print(run_episode(s, truth, "pev", derive_seed(42, 0)))

r = monte_carlo_check(s, truth, "pev", 100_000, 42)
for row in r.rows:
    print(f"agent {row.agent}: mean {row.mean:.4f} +- {row.stderr:.4f}  closed form {row.expected:.4f}  z {row.z:+.2f}")

zs = [monte_carlo_check(bundled("delivery_relay"), bundled("delivery_relay").truthful_reports(), "pev", 2000, k).max_abs_z
      for k in range(20)]
print("max |z| over 20 seeds:", np.round(max(zs), 3))
