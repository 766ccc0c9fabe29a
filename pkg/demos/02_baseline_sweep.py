"""
Virality without intervention
=============================

Sweep network polarisation for the three activation thresholds and print
the virality profile. 30 replicates keep this under a minute; the CLI
default is 300.
"""

from infodisorder import SweepSpec, run_baseline_sweep
from infodisorder.harness import emit_csv, summarize

spec = SweepSpec(theta_values=(0.270, 0.342, 0.414), replicates=30, master_seed=1)
result = run_baseline_sweep(spec)
print(summarize(result))

# low thresholds go viral for mid-range P_N; the 0.414 curve stays flat
for theta in spec.theta_values:
    peak = max(result.select(theta=theta), key=lambda r: r.virality)
    print(f"theta={theta}: peak V={peak.virality:.2f} at P_N={peak.p_n}")

emit_csv(result, "baseline.csv")
