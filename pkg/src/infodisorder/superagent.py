"""Deep Q-learning Super-Agent.

The agent watches ``[GC, GOM, MIA]`` every ``sa_delay`` ticks and picks one
of four interventions. The value network is a 3-24-12-4 ReLU MLP written
directly in numpy, trained with Adam on a mean-squared TD loss drawn from a
replay buffer, with a hard-synced target network.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .abm import Simulation, advance, apply_forcing, apply_reiterate, apply_warning, top_a_active
from .config import DQNConfig, SimConfig
from .metrics import Observation, RunRecord, global_cascade, observe

log = logging.getLogger(__name__)

LAYER_SIZES = (3, 24, 12, 4)
CHECKPOINT_FORMAT = "infodisorder-dqn/1"
AW_EPSILON = 0.01


class Action(IntEnum):
    WARNING = 0
    REITERATING = 1
    FORCING = 2
    OBSERVING = 3


N_ACTIONS = len(Action)


# --------------------------------------------------------------------------
# value network


class QNetwork:
    """Dense ReLU network; ``weights[i]`` has shape ``(fan_out, fan_in)``."""

    def __init__(self, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]):
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        sizes = self.layer_sizes
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i + 1], sizes[i]) or b.shape != (sizes[i + 1],):
                raise ValueError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")

    @classmethod
    def initialize(cls, rng: np.random.Generator, sizes: Sequence[int] = LAYER_SIZES) -> "QNetwork":
        """Uniform init in +-1/sqrt(fan_in)."""
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(weights, biases)

    @classmethod
    def zeros(cls, sizes: Sequence[int] = LAYER_SIZES) -> "QNetwork":
        return cls(
            [np.zeros((o, i)) for i, o in zip(sizes[:-1], sizes[1:])],
            [np.zeros(o) for o in sizes[1:]],
        )

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def copy(self) -> "QNetwork":
        return QNetwork([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def load_from(self, other: "QNetwork") -> None:
        for dst, src in zip(self.params, other.params):
            dst[...] = src

    def _forward(self, x: np.ndarray):
        acts = [x]
        pre = []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w.T + b
            pre.append(z)
            h = z if i == last else np.maximum(z, 0.0)
            acts.append(h)
        return h, pre, acts

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return self._forward(x)[0]

    def backward(self, pre, acts, grad_out: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss w.r.t. ``params`` given dLoss/dOutput."""
        grads: list[np.ndarray] = []
        g = grad_out
        for i in range(len(self.weights) - 1, -1, -1):
            if i != len(self.weights) - 1:
                g = g * (pre[i] > 0)
            grads.append(g.sum(axis=0))          # bias
            grads.append(g.T @ acts[i])          # weight
            g = g @ self.weights[i]
        grads.reverse()
        return grads

    def all_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.params)


def forward(net: QNetwork, obs) -> np.ndarray:
    """Q-values for one observation (or a batch of them)."""
    if isinstance(obs, Observation):
        obs = obs.as_array()
    return net(obs)


class Adam:
    def __init__(self, params: Sequence[np.ndarray], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


# --------------------------------------------------------------------------
# transitions and replay


@dataclass(frozen=True)
class Transition:
    state: Observation
    action: Action
    reward: float
    next_state: Observation
    terminal: bool


class ReplayBuffer:
    """Fixed-capacity ring of transitions."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("replay capacity must be positive")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._cursor] = transition
        self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if batch_size > len(self._items):
            raise ValueError(f"cannot sample {batch_size} from {len(self._items)} transitions")
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]

    def __iter__(self):
        return iter(self._items)


@dataclass
class EpisodeFlags:
    warning_done: bool = False
    forcing_done: bool = False

    def already_done(self, action: Action) -> bool:
        if action == Action.WARNING:
            return self.warning_done
        if action == Action.FORCING:
            return self.forcing_done
        return False

    def mark(self, action: Action) -> None:
        if action == Action.WARNING:
            self.warning_done = True
        elif action == Action.FORCING:
            self.forcing_done = True


# --------------------------------------------------------------------------
# reward


def action_weight(gom: float, mia: float, eps: float = AW_EPSILON) -> float:
    """``1/GOM + 1/MIA`` with both denominators clamped at ``eps``."""
    return 1.0 / max(gom, eps) + 1.0 / max(mia, eps)


def action_result(gc_now: float, gc_prev: float) -> float:
    """Change in global cascade; negative means fewer A-active agents."""
    return gc_now - gc_prev


def reward(ar: float, aw: float, action: Action, flags: EpisodeFlags, gc: float) -> float:
    """Reward for one decision. ``flags`` must reflect the state *before* the action."""
    if flags.already_done(Action(action)):
        return 0.0 if gc > 0.5 else 1.0
    base = 1.0 if ar <= 0 else 0.0
    return (base + aw * 0.5) - ar


# --------------------------------------------------------------------------
# policy and learning


def select_action(net: QNetwork, obs: Observation, epsilon: float, rng: np.random.Generator) -> Action:
    """Epsilon-greedy; greedy ties go to the lowest action index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return Action(int(rng.integers(N_ACTIONS)))
    return Action(int(np.argmax(forward(net, obs))))


def _batch_arrays(batch: Sequence[Transition]):
    states = np.array([t.state.as_array() for t in batch])
    actions = np.array([int(t.action) for t in batch], dtype=np.int64)
    rewards = np.array([t.reward for t in batch], dtype=np.float64)
    next_states = np.array([t.next_state.as_array() for t in batch])
    terminal = np.array([t.terminal for t in batch], dtype=np.float64)
    return states, actions, rewards, next_states, terminal


def td_targets(target_net: QNetwork, batch: Sequence[Transition], gamma: float) -> np.ndarray:
    _, _, rewards, next_states, terminal = _batch_arrays(batch)
    best_next = target_net(next_states).max(axis=1)
    return rewards + gamma * best_next * (1.0 - terminal)


def loss_and_grads(net: QNetwork, states: np.ndarray, actions: np.ndarray,
                   targets: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Mean squared TD error on the taken actions, and its parameter gradients."""
    q, pre, acts = net._forward(states)
    rows = np.arange(len(actions))
    err = q[rows, actions] - targets
    loss = float(np.mean(err ** 2))
    grad_q = np.zeros_like(q)
    grad_q[rows, actions] = 2.0 * err / len(actions)
    return loss, net.backward(pre, acts, grad_q)


def train_step(net: QNetwork, target_net: QNetwork, batch: Sequence[Transition],
               gamma: float, optimizer: Adam) -> float:
    """One Adam step on the batch; returns the pre-update loss."""
    if len(batch) == 0:
        raise ValueError("empty training batch")
    states, actions, *_ = _batch_arrays(batch)
    targets = td_targets(target_net, batch, gamma)
    loss, grads = loss_and_grads(net, states, actions, targets)
    optimizer.step(net.params, grads)
    if not net.all_finite():
        raise FloatingPointError("non-finite parameter after training step")
    return loss


@dataclass
class DQNAgent:
    """Online network, target network, optimiser and replay, trained together."""

    net: QNetwork
    target_net: QNetwork
    optimizer: Adam
    buffer: ReplayBuffer
    dqn: DQNConfig = field(default_factory=DQNConfig)
    epsilon: float = 1.0
    episode: int = 0
    train_steps: int = 0
    master_seed: int = 0

    @classmethod
    def create(cls, dqn: DQNConfig, rng: np.random.Generator, master_seed: int = 0) -> "DQNAgent":
        net = QNetwork.initialize(rng)
        return cls(
            net=net,
            target_net=net.copy(),
            optimizer=Adam(net.params, lr=dqn.learning_rate),
            buffer=ReplayBuffer(dqn.replay_capacity),
            dqn=dqn,
            epsilon=dqn.epsilon_start,
            master_seed=master_seed,
        )

    def learn(self, rng: np.random.Generator) -> float | None:
        if len(self.buffer) < self.dqn.batch_size:
            return None
        batch = self.buffer.sample(self.dqn.batch_size, rng)
        loss = train_step(self.net, self.target_net, batch, self.dqn.gamma, self.optimizer)
        self.train_steps += 1
        if self.train_steps % self.dqn.target_sync_steps == 0:
            self.target_net.load_from(self.net)
        return loss


# --------------------------------------------------------------------------
# episodes


def apply_action(sim: Simulation, action: Action) -> None:
    cfg = sim.config
    if action == Action.WARNING:
        targets = None if cfg.global_warning else top_a_active(sim, cfg.choose_method, cfg.node_range)
        apply_warning(sim, targets)
    elif action == Action.REITERATING:
        apply_reiterate(sim, top_a_active(sim, cfg.choose_method, cfg.node_range))
    elif action == Action.FORCING:
        apply_forcing(sim, cfg.choose_method, cfg.node_range_static_b)


@dataclass
class EpisodeResult:
    record: RunRecord
    transitions: list[Transition]
    actions: list[Action]
    total_reward: float


Policy = Callable[[Observation], Action]


def run_episode(config: SimConfig, policy: Policy | None = None, *,
                agent: DQNAgent | None = None, rng: np.random.Generator | None = None,
                learn: bool = False) -> EpisodeResult:
    """Run one simulation with the Super-Agent acting every ``sa_delay`` ticks.

    The first decision falls at tick ``sa_delay``. ``policy`` maps an
    observation to an action; when omitted, ``agent`` acts epsilon-greedily
    (drawing from ``rng``, never from the simulation's own stream). With
    ``learn`` set, each transition is pushed into the agent's buffer and a
    training step follows once the buffer holds a full batch.
    """
    if policy is None:
        if agent is None or rng is None:
            raise ValueError("need either a policy or an agent plus rng")
        policy = lambda obs: select_action(agent.net, obs, agent.epsilon, rng)  # noqa: E731
    if learn and (agent is None or rng is None):
        raise ValueError("learning needs an agent and rng")

    sim = Simulation.from_config(config)
    trace = [global_cascade(sim)]
    total = config.total_ticks
    delay = config.sa_delay

    flags = EpisodeFlags()
    transitions: list[Transition] = []
    actions: list[Action] = []
    total_reward = 0.0
    trace += advance(sim, min(delay, total))
    n_decisions = total // delay if delay <= total else 0
    nxt = observe(sim) if n_decisions else None
    for k in range(n_decisions):
        # nothing happens between one decision's outcome and the next decision
        state = nxt
        action = Action(policy(state))
        repeat_flags = EpisodeFlags(flags.warning_done, flags.forcing_done)
        apply_action(sim, action)
        flags.mark(action)
        trace += advance(sim, min(delay, total - sim.tick))
        nxt = observe(sim)
        ar = action_result(nxt.gc, state.gc)
        r = reward(ar, action_weight(nxt.gom, nxt.mia), action, repeat_flags, nxt.gc)
        t = Transition(state, action, r, nxt, terminal=(k == n_decisions - 1))
        transitions.append(t)
        actions.append(action)
        total_reward += r
        if learn:
            agent.buffer.push(t)
            agent.learn(rng)
    trace += advance(sim, total - sim.tick)

    record = RunRecord(
        final_gc=trace[-1], gc_trace=trace, theta=config.theta, p_n=config.p_n,
        p_o=config.p_o, sa_delay=delay, seed=config.seed,
    )
    return EpisodeResult(record, transitions, actions, total_reward)


def greedy_policy(net: QNetwork) -> Policy:
    return lambda obs: Action(int(np.argmax(forward(net, obs))))


def constant_policy(action: Action) -> Policy:
    return lambda obs: action


def episode_seed(master_seed: int, episode: int) -> int:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(0x5A, episode))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def train(config: SimConfig, episodes: int, seed: int, dqn: DQNConfig | None = None, *,
          theta_values: Sequence[float] | None = None,
          p_n_values: Sequence[float] | None = None,
          sa_delay_values: Sequence[int] | None = None,
          agent: DQNAgent | None = None,
          progress: Callable[[int, EpisodeResult], None] | None = None) -> DQNAgent:
    """Train a Super-Agent for ``episodes`` episodes from master seed ``seed``.

    Each episode draws a fresh simulation seed and, when grids are given,
    a threshold, a network polarisation and a decision delay uniformly from
    them. Epsilon decays multiplicatively after every episode.
    """
    if episodes < 1:
        raise ValueError("need at least one episode")
    dqn = dqn or DQNConfig()
    rng = np.random.default_rng(seed)
    if agent is None:
        agent = DQNAgent.create(dqn, rng, master_seed=seed)
    for _ in range(episodes):
        ep = agent.episode
        changes = {"seed": episode_seed(seed, ep)}
        if theta_values:
            changes["theta"] = float(theta_values[int(rng.integers(len(theta_values)))])
        if p_n_values:
            changes["p_n"] = float(p_n_values[int(rng.integers(len(p_n_values)))])
        if sa_delay_values:
            changes["sa_delay"] = int(sa_delay_values[int(rng.integers(len(sa_delay_values)))])
        result = run_episode(config.replace(**changes), agent=agent, rng=rng, learn=True)
        agent.episode += 1
        agent.epsilon = max(agent.dqn.epsilon_end, agent.epsilon * agent.dqn.epsilon_decay)
        if progress is not None:
            progress(ep, result)
    return agent


# --------------------------------------------------------------------------
# checkpoints


def _net_to_dict(net: QNetwork) -> dict:
    return {
        "weights": [w.ravel().tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def _net_from_dict(d: dict, sizes: Sequence[int]) -> QNetwork:
    weights = [np.array(w, dtype=np.float64).reshape(o, i)
               for w, i, o in zip(d["weights"], sizes[:-1], sizes[1:])]
    return QNetwork(weights, [np.array(b, dtype=np.float64) for b in d["biases"]])


def checkpoint_dict(agent: DQNAgent) -> dict:
    opt = agent.optimizer
    return {
        "format": CHECKPOINT_FORMAT,
        "layer_sizes": list(agent.net.layer_sizes),
        "online": _net_to_dict(agent.net),
        "target": _net_to_dict(agent.target_net),
        "optimizer": {
            "name": "adam",
            "lr": opt.lr, "beta1": opt.beta1, "beta2": opt.beta2, "eps": opt.eps, "t": opt.t,
            "m": [m.ravel().tolist() for m in opt.m],
            "v": [v.ravel().tolist() for v in opt.v],
        },
        "epsilon": agent.epsilon,
        "episode": agent.episode,
        "train_steps": agent.train_steps,
        "master_seed": agent.master_seed,
        "hyperparameters": {
            "gamma": agent.dqn.gamma,
            "learning_rate": agent.dqn.learning_rate,
            "batch_size": agent.dqn.batch_size,
            "replay_capacity": agent.dqn.replay_capacity,
            "target_sync_steps": agent.dqn.target_sync_steps,
            "epsilon_start": agent.dqn.epsilon_start,
            "epsilon_end": agent.dqn.epsilon_end,
            "epsilon_decay": agent.dqn.epsilon_decay,
            "episodes": agent.dqn.episodes,
        },
    }


def save_checkpoint(agent: DQNAgent, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(checkpoint_dict(agent), indent=1) + "\n", encoding="utf-8")
    return path


class CheckpointError(ValueError):
    pass


def load_checkpoint(path: str | Path) -> DQNAgent:
    """Rebuild an agent (without its replay contents) from a checkpoint file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint {path} is not valid JSON: {exc}") from exc
    if data.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"checkpoint {path}: unsupported format {data.get('format')!r}")
    sizes = tuple(data.get("layer_sizes", ()))
    if sizes != LAYER_SIZES:
        raise CheckpointError(f"checkpoint {path}: architecture {sizes} != expected {LAYER_SIZES}")
    try:
        net = _net_from_dict(data["online"], sizes)
        target = _net_from_dict(data["target"], sizes)
        dqn = DQNConfig(**data["hyperparameters"])
        o = data["optimizer"]
        opt = Adam(net.params, lr=o["lr"], beta1=o["beta1"], beta2=o["beta2"], eps=o["eps"])
        opt.t = o["t"]
        opt.m = [np.array(m, dtype=np.float64).reshape(p.shape) for m, p in zip(o["m"], net.params)]
        opt.v = [np.array(v, dtype=np.float64).reshape(p.shape) for v, p in zip(o["v"], net.params)]
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"checkpoint {path} is malformed: {exc}") from exc
    return DQNAgent(
        net=net, target_net=target, optimizer=opt, buffer=ReplayBuffer(dqn.replay_capacity),
        dqn=dqn, epsilon=data["epsilon"], episode=data["episode"],
        train_steps=data["train_steps"], master_seed=data["master_seed"],
    )
