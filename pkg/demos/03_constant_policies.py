"""
What each intervention does on its own
======================================

Before training anything, hold the Super-Agent to a single action and
compare the final cascade against doing nothing. Forcing and Reiterating
act on the most central agents; Warning damps every exposure.
"""

import numpy as np

from infodisorder import SimConfig, simulate
from infodisorder.superagent import Action, constant_policy, run_episode

seeds = range(40)
base = np.mean([simulate(SimConfig(seed=s, p_n=0.5)).final_gc for s in seeds])
print(f"no Super-Agent      mean final GC = {base:.3f}")

for action in Action:
    finals = [
        run_episode(SimConfig(seed=s, p_n=0.5, sa_delay=2), constant_policy(action)).record.final_gc
        for s in seeds
    ]
    print(f"{action.name:<12} every 2 ticks: mean final GC = {np.mean(finals):.3f}")
# Observing reproduces the baseline exactly: the agent draws from its own RNG
