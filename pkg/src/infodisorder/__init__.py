"""Agent-based fake-news spreading on echo-chambered networks, with a deep
Q-learning Super-Agent that learns when to warn, reiterate, force or wait."""

from .abm import Simulation, classify_opinion, tick
from .config import DQNConfig, ExperimentConfig, SimConfig, load_config
from .harness import SweepSpec, run_baseline_sweep, run_sa_sweep, simulate
from .metrics import global_cascade, global_opinion_metric, most_influent_a, virality
from .superagent import Action, QNetwork, load_checkpoint, run_episode, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "Action", "DQNConfig", "ExperimentConfig", "QNetwork", "SimConfig", "Simulation",
    "SweepSpec", "classify_opinion", "global_cascade", "global_opinion_metric",
    "load_checkpoint", "load_config", "most_influent_a", "run_baseline_sweep",
    "run_episode", "run_sa_sweep", "save_checkpoint", "simulate", "tick", "train", "virality",
]
