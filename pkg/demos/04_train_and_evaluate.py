"""
Training the Super-Agent
========================

Train the deep Q-network for a short budget, save the checkpoint, then
compare swept virality with and without it at sa-delay 2. The full recipe
uses 500 episodes (about half a minute on one core).
"""

from infodisorder import SweepSpec, run_baseline_sweep, run_sa_sweep, train
from infodisorder.config import DEFAULT_P_N_GRID, DEFAULT_SA_DELAYS, DEFAULT_THETAS, SimConfig
from infodisorder.harness import grid_mean_virality
from infodisorder.superagent import save_checkpoint

rewards = []
agent = train(SimConfig(), episodes=200, seed=1,
              theta_values=DEFAULT_THETAS, p_n_values=DEFAULT_P_N_GRID,
              sa_delay_values=DEFAULT_SA_DELAYS,
              progress=lambda ep, res: rewards.append(res.total_reward / max(len(res.actions), 1)))
print(f"mean reward per decision: first 50 episodes {sum(rewards[:50]) / 50:.1f}, "
      f"last 50 {sum(rewards[-50:]) / 50:.1f}")
save_checkpoint(agent, "super_agent.json")

spec = dict(theta_values=(0.27,), replicates=30, master_seed=3)
base = run_baseline_sweep(SweepSpec(**spec))
with_sa = run_sa_sweep(SweepSpec(sa_delay=2, **spec), agent)
print(f"theta=0.27 grid-mean virality: baseline {grid_mean_virality(base.rows):.2f}, "
      f"Super-Agent every 2 ticks {grid_mean_virality(with_sa.rows):.2f}")
