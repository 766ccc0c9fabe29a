"""
One simulation, tick by tick
============================

Build the default network, look at the echo chamber, and watch the share
of A-active agents evolve over 100 ticks.
"""

import numpy as np

from infodisorder import SimConfig, Simulation
from infodisorder.abm import advance, boundary_edge_count

cfg = SimConfig(theta=0.27, p_n=0.5, seed=7)
sim = Simulation.from_config(cfg)

# 20 chamber nodes; half the edges were offered for rewiring, so few
# edges still cross the chamber boundary
print("chamber size:", sim.is_in_cluster.sum())
print("edges:", sim.graph.edge_count, "crossing the boundary:", boundary_edge_count(sim))
print("seeded A:", sim.is_a_active.sum(), "seeded B:", sim.is_b_active.sum())

trace = advance(sim, cfg.total_ticks)
for t in (0, 4, 9, 24, 49, 99):
    print(f"tick {t + 1:3d}  GC = {trace[t]:.2f}")

# final opinion histogram over the three bands
bands = np.histogram(sim.om, bins=[0, 0.33, 0.66, 1.0])[0]
print("B / neutral / A:", bands)
