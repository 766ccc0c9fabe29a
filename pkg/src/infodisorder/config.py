"""Simulation parameters and the INI-style configuration file that carries them.

Config files use the attribute names of the model's parameter tables
verbatim (``nb-nodes``, ``activation-threshold``, ``p_n`` ...). Keys that
the experiments sweep over (``activation-threshold``, ``p_n``, ``sa-delay``)
accept a comma-separated list; a single-run :class:`SimConfig` takes the
first entry.

Example::

    [simulation]
    nb-nodes = 100
    activation-threshold = 0.270, 0.342, 0.414
    p_n = 0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0
    sa-delay = 5, 4, 2
    seed = 42
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

NETWORKS = ("erdos_renyi", "small_world", "preferential_attachment")
_NETWORK_ALIASES = {
    "erdos_renyi": "erdos_renyi",
    "erdos-renyi": "erdos_renyi",
    "erdős-rényi": "erdos_renyi",
    "er": "erdos_renyi",
    "small_world": "small_world",
    "small-world": "small_world",
    "watts_strogatz": "small_world",
    "preferential_attachment": "preferential_attachment",
    "preferential-attachment": "preferential_attachment",
    "barabasi_albert": "preferential_attachment",
}

DEFAULT_P_N_GRID = tuple(round(0.1 * i, 1) for i in range(11))
DEFAULT_THETAS = (0.270, 0.342, 0.414)
DEFAULT_SA_DELAYS = (5, 4, 2)


class ConfigError(ValueError):
    """Invalid parameter value or malformed configuration file."""


@dataclass(frozen=True)
class SimConfig:
    nb_nodes: int = 100
    total_ticks: int = 100
    network: str = "erdos_renyi"
    k_value: int = 8
    p_o: float = 0.0
    p_n: float = 0.5
    initial_opinion_metric: float = 0.5
    opinion_metric_step: float = 0.10
    theta: float = 0.270
    echo_chamber_fraction: float = 0.20
    node_range: float = 0.10
    node_range_static_b: float = 0.05
    global_warning: bool = True
    choose_method: str = "degree"
    warning_impact: float = 0.10
    sa_delay: int = 5
    seed: int = 0
    # not part of the published tables
    rewire_probability: float = 0.1
    mia_method: str = "betweenness"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.nb_nodes < 2:
            raise ConfigError(f"nb-nodes must be >= 2, got {self.nb_nodes}")
        if self.total_ticks < 0:
            raise ConfigError(f"total-ticks must be >= 0, got {self.total_ticks}")
        if self.network not in NETWORKS:
            raise ConfigError(f"unknown network {self.network!r}; expected one of {NETWORKS}")
        for name in ("p_o", "p_n", "theta", "echo_chamber_fraction", "node_range",
                     "node_range_static_b", "warning_impact", "initial_opinion_metric",
                     "rewire_probability"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")
        if self.opinion_metric_step < 0:
            raise ConfigError(f"opinion-metric-step must be >= 0, got {self.opinion_metric_step}")
        if self.theta - self.p_o < 0:
            raise ConfigError(
                f"activation threshold minus p_o is negative ({self.theta} - {self.p_o})"
            )
        if self.choose_method not in ("degree", "betweenness", "pagerank"):
            raise ConfigError(f"unknown choose-method {self.choose_method!r}")
        if self.mia_method not in ("degree", "betweenness"):
            raise ConfigError(f"unknown mia-method {self.mia_method!r}")
        if self.sa_delay < 1:
            raise ConfigError(f"sa-delay must be >= 1, got {self.sa_delay}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class DQNConfig:
    """Learning hyperparameters for the Super-Agent (none are fixed by the model)."""

    gamma: float = 0.95
    learning_rate: float = 1e-3
    batch_size: int = 128
    replay_capacity: int = 10_000
    target_sync_steps: int = 100
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay: float = 0.995
    episodes: int = 500

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.batch_size < 1 or self.replay_capacity < self.batch_size:
            raise ConfigError("replay capacity must be at least the batch size")
        if self.target_sync_steps < 1:
            raise ConfigError("target-sync-steps must be >= 1")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ConfigError("need 0 <= epsilon-end <= epsilon-start <= 1")
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a config file can describe: a base run plus sweep axes."""

    sim: SimConfig = field(default_factory=SimConfig)
    dqn: DQNConfig = field(default_factory=DQNConfig)
    theta_values: tuple[float, ...] = DEFAULT_THETAS
    p_n_values: tuple[float, ...] = DEFAULT_P_N_GRID
    sa_delay_values: tuple[int, ...] = DEFAULT_SA_DELAYS
    replicates: int = 300


# file key -> (section target, attribute, parser)
def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _network(text: str) -> str:
    key = text.strip().lower().replace(" ", "_")
    if key not in _NETWORK_ALIASES:
        raise ValueError(f"unknown network {text!r}")
    return _NETWORK_ALIASES[key]


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


_SIM_KEYS = {
    "nb-nodes": ("nb_nodes", int),
    "total-ticks": ("total_ticks", int),
    "network": ("network", _network),
    "k-value": ("k_value", int),
    "p_o": ("p_o", float),
    "initial-opinion-metric-value": ("initial_opinion_metric", float),
    "opinion-metric-step": ("opinion_metric_step", float),
    "echo-chamber-fraction": ("echo_chamber_fraction", float),
    "node-range": ("node_range", float),
    "node-range-static-b": ("node_range_static_b", float),
    "global-warning": ("global_warning", _bool),
    "choose-method": ("choose_method", lambda s: s.strip().lower()),
    "warning-impact": ("warning_impact", float),
    "seed": ("seed", int),
    "rewire-probability": ("rewire_probability", float),
    "mia-method": ("mia_method", lambda s: s.strip().lower()),
}
# swept keys: list-valued in the file
_LIST_KEYS = {
    "activation-threshold": ("theta", "theta_values", _floats),
    "p_n": ("p_n", "p_n_values", _floats),
    "sa-delay": ("sa_delay", "sa_delay_values", _ints),
}
_DQN_KEYS = {
    "gamma": ("gamma", float),
    "learning-rate": ("learning_rate", float),
    "batch-size": ("batch_size", int),
    "replay-capacity": ("replay_capacity", int),
    "target-sync-steps": ("target_sync_steps", int),
    "epsilon-start": ("epsilon_start", float),
    "epsilon-end": ("epsilon_end", float),
    "epsilon-decay": ("epsilon_decay", float),
    "episodes": ("episodes", int),
}


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse config text. Section headers are optional; all keys share one namespace."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=", ":"))
    parser.optionxform = str  # keep p_n / p_o case and punctuation
    if not text.lstrip().startswith("["):
        text = "[simulation]\n" + text
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    sim_kw: dict = {}
    dqn_kw: dict = {}
    exp_kw: dict = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            norm = key.strip().lower()
            try:
                if norm in _SIM_KEYS:
                    attr, conv = _SIM_KEYS[norm]
                    sim_kw[attr] = conv(raw)
                elif norm in _LIST_KEYS:
                    attr, list_attr, conv = _LIST_KEYS[norm]
                    values = conv(raw)
                    if not values:
                        raise ValueError("empty list")
                    sim_kw[attr] = values[0]
                    exp_kw[list_attr] = values
                elif norm in _DQN_KEYS:
                    attr, conv = _DQN_KEYS[norm]
                    dqn_kw[attr] = conv(raw)
                elif norm == "replicates":
                    exp_kw["replicates"] = int(raw)
                else:
                    raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {key!r}: {exc}") from exc

    sim = SimConfig(**sim_kw)
    # every swept value must itself make a valid config
    for theta in exp_kw.get("theta_values", ()):
        sim.replace(theta=theta)
    for p_n in exp_kw.get("p_n_values", ()):
        sim.replace(p_n=p_n)
    for delay in exp_kw.get("sa_delay_values", ()):
        sim.replace(sa_delay=delay)
    if exp_kw.get("replicates", 1) < 1:
        raise ConfigError(f"{source}: replicates must be >= 1")
    return ExperimentConfig(sim=sim, dqn=DQNConfig(**dqn_kw), **exp_kw)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, source=str(path))
