"""Threshold opinion dynamics on an echo-chambered network.

Agent state is kept as parallel numpy arrays on :class:`Simulation`; use
:meth:`Simulation.agent` for a per-agent snapshot. Every operation mutates
the simulation in place and returns it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import SimConfig
from .graph import (
    CentralityScores,
    Graph,
    centrality,
    gen_erdos_renyi,
    gen_preferential_attachment,
    gen_small_world,
    round_half_up,
)

log = logging.getLogger(__name__)

B_MAX = 0.33
A_MIN = 0.66

TOWARD_A = 1
TOWARD_B = -1


class Opinion(str, Enum):
    A = "A"
    B = "B"
    C = "C"


def classify_opinion(om: float) -> Opinion:
    """Opinion band: B on [0, 0.33], C on (0.33, 0.66), A on [0.66, 1]."""
    if not 0.0 <= om <= 1.0:
        raise ValueError(f"opinion metric {om} outside [0, 1]")
    if om <= B_MAX:
        return Opinion.B
    if om >= A_MIN:
        return Opinion.A
    return Opinion.C


@dataclass(frozen=True)
class AgentState:
    om: float
    theta: float
    is_in_cluster: bool
    is_a_active: bool
    is_b_active: bool
    warning: bool
    reiterate_remaining: int
    is_opinion_b_static: bool


class Simulation:
    """Full model state for one run.

    Construct with :meth:`from_config`, which draws the network, builds the
    echo chamber, seeds opinions and assigns thresholds from one random
    stream seeded by ``config.seed``.
    """

    def __init__(self, graph: Graph, config: SimConfig, rng: np.random.Generator):
        n = graph.n
        if n != config.nb_nodes:
            raise ValueError(f"graph has {n} nodes but config says {config.nb_nodes}")
        self.graph = graph
        self.config = config
        self.rng = rng
        self.tick = 0
        self.om = np.full(n, config.initial_opinion_metric, dtype=np.float64)
        self.theta = np.full(n, config.theta, dtype=np.float64)
        self.is_in_cluster = np.zeros(n, dtype=bool)
        self.is_a_active = np.zeros(n, dtype=bool)
        self.is_b_active = np.zeros(n, dtype=bool)
        self.warning = np.zeros(n, dtype=bool)
        self.reiterate_remaining = np.zeros(n, dtype=np.int64)
        self.is_opinion_b_static = np.zeros(n, dtype=bool)
        # set by tick() when a round changed nothing and drew no randomness
        self.quiescent = False
        self._refresh_flags()
        self._topology_changed()

    @classmethod
    def from_config(cls, config: SimConfig) -> "Simulation":
        rng = np.random.default_rng(config.seed)
        graph = generate_network(config, rng)
        sim = cls(graph, config, rng)
        build_echo_chamber(sim)
        seed_opinions(sim)
        assign_thresholds(sim)
        return sim

    @property
    def n(self) -> int:
        return self.graph.n

    def agent(self, i: int) -> AgentState:
        return AgentState(
            om=float(self.om[i]),
            theta=float(self.theta[i]),
            is_in_cluster=bool(self.is_in_cluster[i]),
            is_a_active=bool(self.is_a_active[i]),
            is_b_active=bool(self.is_b_active[i]),
            warning=bool(self.warning[i]),
            reiterate_remaining=int(self.reiterate_remaining[i]),
            is_opinion_b_static=bool(self.is_opinion_b_static[i]),
        )

    def centrality(self, method: str) -> CentralityScores:
        # topology is fixed once the chamber is built, so scores are cached
        if method not in self._centrality_cache:
            self._centrality_cache[method] = centrality(self.graph, method)
        return self._centrality_cache[method]

    def snapshot(self) -> dict[str, np.ndarray]:
        return {
            "om": self.om.copy(),
            "is_a_active": self.is_a_active.copy(),
            "is_b_active": self.is_b_active.copy(),
            "warning": self.warning.copy(),
            "reiterate_remaining": self.reiterate_remaining.copy(),
            "is_opinion_b_static": self.is_opinion_b_static.copy(),
        }

    def _refresh_flags(self) -> None:
        self.is_a_active = self.om >= A_MIN
        self.is_b_active = self.om <= B_MAX

    def _topology_changed(self) -> None:
        self._adj_matrix = self.graph.adjacency_matrix()
        self._degree = self.graph.degrees().astype(np.float64)
        self._centrality_cache: dict[str, CentralityScores] = {}


def generate_network(config: SimConfig, rng: np.random.Generator) -> Graph:
    n, k = config.nb_nodes, config.k_value
    if config.network == "erdos_renyi":
        return gen_erdos_renyi(n, k, rng)
    if config.network == "small_world":
        return gen_small_world(n, k, config.rewire_probability, rng)
    # preferential attachment adds k/2 edges per node to match average degree k
    return gen_preferential_attachment(n, max(1, k // 2), rng)


def boundary_edge_count(sim: Simulation) -> int:
    c = sim.is_in_cluster
    return sum(1 for u, v in sim.graph.edges if c[u] != c[v])


def build_echo_chamber(sim: Simulation) -> Simulation:
    """Pick the chamber nodes, then rewire sampled boundary edges inward.

    ``round(E * p_n)`` edges are drawn without replacement; every drawn edge
    with exactly one chamber endpoint T is replaced by an edge from T to a
    chamber node not yet adjacent to T. Edge count is unchanged.
    """
    cfg = sim.config
    g = sim.graph
    n = g.n
    c = round_half_up(n * cfg.echo_chamber_fraction)
    members = rng_sorted_choice(sim.rng, n, c)
    sim.is_in_cluster = np.zeros(n, dtype=bool)
    sim.is_in_cluster[members] = True

    edges = g.edges
    e_prime = round_half_up(len(edges) * cfg.p_n)
    picked = sim.rng.choice(len(edges), size=e_prime, replace=False) if e_prime else []
    in_c = sim.is_in_cluster
    skipped = 0
    for idx in picked:
        u, v = edges[int(idx)]
        if in_c[u] == in_c[v]:
            continue
        t = u if in_c[u] else v
        candidates = [w for w in members if w != t and not g.has_edge(t, w)]
        if not candidates:
            skipped += 1
            continue
        w = candidates[int(sim.rng.integers(len(candidates)))]
        g.remove_edge(u, v)
        g.add_edge(t, w)
    if skipped:
        log.debug("echo chamber: %d rewires skipped, no free chamber endpoint", skipped)
    sim._topology_changed()
    return sim


def rng_sorted_choice(rng: np.random.Generator, n: int, size: int) -> list[int]:
    return sorted(int(x) for x in rng.choice(n, size=size, replace=False))


def seed_opinions(sim: Simulation) -> Simulation:
    """Activate A around a random chamber node and B around a random outside node.

    Seeded agents draw their metric uniformly inside their opinion band. A node
    reached by both seeds goes to A inside the chamber and to B outside it.
    """
    inside = np.flatnonzero(sim.is_in_cluster)
    outside = np.flatnonzero(~sim.is_in_cluster)
    if len(inside) == 0:
        raise ValueError("echo chamber is empty; cannot place the A seed")
    if len(outside) == 0:
        raise ValueError("no nodes outside the echo chamber; cannot place the B seed")
    g = sim.graph
    init_a = int(inside[sim.rng.integers(len(inside))])
    init_b = int(outside[sim.rng.integers(len(outside))])
    group_a = {init_a, *g.neighbors(init_a)}
    group_b = {init_b, *g.neighbors(init_b)}
    for node in group_a & group_b:
        if sim.is_in_cluster[node]:
            group_b.discard(node)
        else:
            group_a.discard(node)

    sim.om[:] = sim.config.initial_opinion_metric
    a_nodes = sorted(group_a)
    b_nodes = sorted(group_b)
    sim.om[a_nodes] = sim.rng.uniform(A_MIN, 1.0, size=len(a_nodes))
    sim.om[b_nodes] = sim.rng.uniform(0.0, B_MAX, size=len(b_nodes))
    sim._refresh_flags()
    return sim


def assign_thresholds(sim: Simulation) -> Simulation:
    cfg = sim.config
    if cfg.theta - cfg.p_o < 0:
        raise ValueError(f"theta - p_o is negative ({cfg.theta} - {cfg.p_o})")
    sim.theta = np.where(sim.is_in_cluster, cfg.theta - cfg.p_o, cfg.theta)
    return sim


def influence_attempt(sim: Simulation, agent_id: int, direction: int) -> Simulation:
    """Move one agent a single opinion step toward A (+1) or B (-1).

    Forced agents never move. An attempt that the clamp would turn into a
    no-op is skipped without consuming randomness. Warned agents pass the
    update only when a uniform draw is <= ``warning_impact``.
    """
    i = agent_id
    if sim.is_opinion_b_static[i]:
        return sim
    step = sim.config.opinion_metric_step
    new = min(max(sim.om[i] + direction * step, 0.0), 1.0)
    if new == sim.om[i]:
        return sim
    if sim.warning[i] and sim.rng.random() > sim.config.warning_impact:
        return sim
    sim.om[i] = new
    sim.is_a_active[i] = new >= A_MIN
    sim.is_b_active[i] = new <= B_MAX
    return sim


def _gated_step(sim: Simulation, movers: np.ndarray, direction: np.ndarray) -> bool:
    """Vectorised ``influence_attempt`` over ascending node ids ``movers``.

    Returns whether anything moved or any randomness was consumed.
    """
    step = sim.config.opinion_metric_step
    movers = movers[~sim.is_opinion_b_static[movers]]
    if len(movers) == 0:
        return False
    d = direction[movers] if direction.ndim else direction
    new = np.clip(sim.om[movers] + d * step, 0.0, 1.0)
    effective = new != sim.om[movers]
    movers, new = movers[effective], new[effective]
    warned = sim.warning[movers]
    n_warned = int(warned.sum())
    if n_warned:
        passed = np.ones(len(movers), dtype=bool)
        passed[warned] = sim.rng.random(n_warned) <= sim.config.warning_impact
        movers, new = movers[passed], new[passed]
    sim.om[movers] = new
    return n_warned > 0 or len(movers) > 0


def tick(sim: Simulation) -> Simulation:
    """Advance one synchronous round.

    Peer influence reads only the pre-tick activity flags: an agent moves
    toward A when the A-active share of its neighbours exceeds its threshold,
    likewise for B; if both do, the larger share wins and an exact tie goes
    to B. Pending reiterate exposures are processed afterwards: one uniform
    draw per exposed agent (ascending id) decides whether a B step is
    attempted, then any warning-gate draws follow.
    """
    if sim.tick >= sim.config.total_ticks:
        raise RuntimeError(f"simulation already at final tick {sim.tick}")
    deg = sim._degree
    has_nbrs = deg > 0
    safe_deg = np.where(has_nbrs, deg, 1.0)
    frac_a = (sim._adj_matrix @ sim.is_a_active.astype(np.float64)) / safe_deg
    frac_b = (sim._adj_matrix @ sim.is_b_active.astype(np.float64)) / safe_deg
    want_a = has_nbrs & (frac_a > sim.theta)
    want_b = has_nbrs & (frac_b > sim.theta)
    direction = np.zeros(sim.n, dtype=np.float64)
    direction[want_a] = TOWARD_A
    direction[want_b & (~want_a | (frac_b >= frac_a))] = TOWARD_B
    active = _gated_step(sim, np.flatnonzero(direction), direction)

    pending = np.flatnonzero(sim.reiterate_remaining > 0)
    if len(pending):
        active = True
        y = sim.rng.random(len(pending))
        exposed = pending[y < sim.theta[pending]]
        _gated_step(sim, exposed, np.float64(TOWARD_B))
        sim.reiterate_remaining[pending] -= 1
    sim.quiescent = not active
    sim._refresh_flags()
    # conversion to B ends the exposure early
    sim.reiterate_remaining[sim.is_b_active] = 0
    sim.tick += 1
    return sim


def advance(sim: Simulation, n_ticks: int) -> list[float]:
    """Run ``n_ticks`` rounds and return the global cascade after each.

    Once a round is quiescent every later round is an exact repeat of it,
    so the remaining rounds only advance the clock.
    """
    trace = []
    for _ in range(n_ticks):
        if sim.quiescent:
            if sim.tick >= sim.config.total_ticks:
                raise RuntimeError(f"simulation already at final tick {sim.tick}")
            sim.tick += 1
        else:
            tick(sim)
        trace.append(float(np.count_nonzero(sim.is_a_active)) / sim.n)
    return trace


def top_a_active(sim: Simulation, method: str, fraction: float) -> np.ndarray:
    """The ``round(fraction * N)`` highest-ranked agents among those A-active."""
    count = round_half_up(fraction * sim.n)
    ranking = sim.centrality(method).ranking()
    return ranking[sim.is_a_active[ranking]][:count]


def apply_warning(sim: Simulation, targets=None) -> Simulation:
    """Set the persistent warning flag on ``targets`` (all agents when ``None``)."""
    sim.quiescent = False
    if targets is None:
        sim.warning[:] = True
    else:
        sim.warning[np.asarray(targets, dtype=np.int64)] = True
    return sim


def apply_reiterate(sim: Simulation, targets) -> Simulation:
    sim.quiescent = False
    targets = np.asarray(targets, dtype=np.int64)
    sim.reiterate_remaining[targets] = sim._degree[targets].astype(np.int64)
    return sim


def apply_forcing(sim: Simulation, method: str, fraction: float) -> Simulation:
    """Lock the top-centrality ``round(fraction * N)`` agents to opinion B."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"forcing fraction must be in [0, 1], got {fraction}")
    sim.quiescent = False
    chosen = sim.centrality(method).top(round_half_up(fraction * sim.n))
    sim.om[chosen] = 0.0
    sim.is_opinion_b_static[chosen] = True
    sim.reiterate_remaining[chosen] = 0
    sim._refresh_flags()
    return sim
