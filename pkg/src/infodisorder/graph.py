"""Undirected network generators and the centrality measures used for targeting.

Nodes are labelled ``0 .. n-1``. All generators draw from a caller-supplied
``numpy.random.Generator`` so the same seed always yields the same graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

CENTRALITY_METHODS = ("degree", "betweenness", "pagerank")


class Graph:
    """Simple undirected graph: no self-loops, no parallel edges."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 1:
            raise ValueError(f"node count must be positive, got {n}")
        self.n = int(n)
        self._adj: list[set[int]] = [set() for _ in range(self.n)]
        self._m = 0
        for u, v in edges:
            self.add_edge(u, v)

    def add_edge(self, u: int, v: int) -> None:
        u, v = int(u), int(v)
        if u == v:
            raise ValueError(f"self-loop on node {u}")
        if v in self._adj[u]:
            raise ValueError(f"duplicate edge ({u}, {v})")
        self._adj[u].add(v)
        self._adj[v].add(u)
        self._m += 1

    def remove_edge(self, u: int, v: int) -> None:
        if v not in self._adj[u]:
            raise KeyError(f"no edge ({u}, {v})")
        self._adj[u].discard(v)
        self._adj[v].discard(u)
        self._m -= 1

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def neighbors(self, u: int) -> list[int]:
        return sorted(self._adj[u])

    def degree(self, u: int) -> int:
        return len(self._adj[u])

    @property
    def edge_count(self) -> int:
        return self._m

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Sorted list of ``(u, v)`` pairs with ``u < v``."""
        return [(u, v) for u in range(self.n) for v in sorted(self._adj[u]) if u < v]

    @property
    def adjacency(self) -> list[list[int]]:
        return [sorted(s) for s in self._adj]

    def degrees(self) -> np.ndarray:
        return np.array([len(s) for s in self._adj], dtype=np.int64)

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.float64)
        for u, nbrs in enumerate(self._adj):
            if nbrs:
                a[u, list(nbrs)] = 1.0
        return a

    def copy(self) -> "Graph":
        g = Graph(self.n)
        g._adj = [set(s) for s in self._adj]
        g._m = self._m
        return g

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self._adj == other._adj

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self._m})"


@dataclass
class CentralityScores:
    method: str
    scores: np.ndarray = field(repr=False)
    _ranking: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def ranking(self) -> np.ndarray:
        """Node ids by descending score, ties broken by ascending id."""
        if self._ranking is None:
            # lexsort sorts by the last key first
            self._ranking = np.lexsort((np.arange(len(self.scores)), -self.scores))
        return self._ranking

    def top(self, count: int) -> np.ndarray:
        return self.ranking()[: max(int(count), 0)]


def gen_erdos_renyi(n: int, k: float, rng: np.random.Generator) -> Graph:
    """G(n, M) random graph with ``M = round(n*k/2)`` edges.

    Fixing the edge count (rather than the edge probability) keeps E
    deterministic per run, which the echo-chamber rewiring depends on.
    """
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    if k < 0 or k > n - 1:
        raise ValueError(f"average degree k={k} outside [0, {n - 1}]")
    n_pairs = n * (n - 1) // 2
    m = round_half_up(n * k / 2)
    if m > n_pairs:
        raise ValueError(f"{m} edges requested but only {n_pairs} pairs exist")
    idx = np.sort(rng.choice(n_pairs, size=m, replace=False))
    us, vs = np.triu_indices(n, k=1)
    return Graph(n, zip(us[idx].tolist(), vs[idx].tolist()))


def gen_small_world(n: int, k: int, rewire_prob: float, rng: np.random.Generator) -> Graph:
    """Watts-Strogatz ring lattice of even degree ``k`` with random rewiring."""
    if k % 2:
        raise ValueError(f"small-world degree must be even, got {k}")
    if not 0 <= k < n:
        raise ValueError(f"need 0 <= k < n, got k={k}, n={n}")
    if not 0.0 <= rewire_prob <= 1.0:
        raise ValueError(f"rewire_prob must be in [0, 1], got {rewire_prob}")
    g = Graph(n)
    for u in range(n):
        for j in range(1, k // 2 + 1):
            g.add_edge(u, (u + j) % n)
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            if rng.random() >= rewire_prob:
                continue
            # a node already linked to everyone cannot take a new endpoint
            if g.degree(u) >= n - 1:
                continue
            while True:
                w = int(rng.integers(n))
                if w != u and not g.has_edge(u, w):
                    break
            g.remove_edge(u, v)
            g.add_edge(u, w)
    return g


def gen_preferential_attachment(n: int, m: int, rng: np.random.Generator) -> Graph:
    """Barabasi-Albert growth from an ``m``-node clique."""
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    g = Graph(n)
    for u in range(m):
        for v in range(u + 1, m):
            g.add_edge(u, v)
    deg = np.zeros(n, dtype=np.float64)
    deg[:m] = m - 1
    for new in range(m, n):
        weights = deg[:new]
        total = weights.sum()
        p = weights / total if total > 0 else None
        targets = rng.choice(new, size=m, replace=False, p=p)
        for t in sorted(int(x) for x in targets):
            g.add_edge(new, t)
            deg[t] += 1
        deg[new] = m
    return g


def degree(g: Graph) -> CentralityScores:
    return CentralityScores("degree", g.degrees().astype(np.float64))


def betweenness(g: Graph) -> CentralityScores:
    """Brandes' algorithm, unweighted, unnormalised.

    Runs the BFS and the dependency back-propagation for all sources at once,
    one distance level at a time, as dense matrix products. Each unordered
    pair (s, t) contributes once, so the centre of a star with L leaves
    scores L*(L-1)/2. Only the ranking is consumed downstream.
    """
    n = g.n
    a = g.adjacency_matrix()
    # row s holds the BFS from source s
    dist = np.full((n, n), -1, dtype=np.int64)
    np.fill_diagonal(dist, 0)
    sigma = np.eye(n)
    frontier = np.eye(n)
    levels = [frontier.astype(bool)]
    d = 0
    while True:
        reach = (frontier * sigma) @ a
        new = (reach > 0) & (dist < 0)
        if not new.any():
            break
        d += 1
        dist[new] = d
        sigma[new] = reach[new]
        frontier = new.astype(np.float64)
        levels.append(new)
    delta = np.zeros((n, n))
    safe_sigma = np.where(sigma > 0, sigma, 1.0)
    for depth in range(len(levels) - 1, 0, -1):
        below = np.where(levels[depth], (1.0 + delta) / safe_sigma, 0.0)
        delta += np.where(levels[depth - 1], sigma * (below @ a), 0.0)
    np.fill_diagonal(delta, 0.0)
    return CentralityScores("betweenness", delta.sum(axis=0) / 2.0)


def pagerank(g: Graph, damping: float = 0.85, tol: float = 1e-8, max_iter: int = 100) -> CentralityScores:
    """Power iteration treating each undirected edge as two directed links.

    Isolated nodes hand their whole mass to the uniform teleport vector.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError(f"damping must be in (0, 1), got {damping}")
    n = g.n
    a = g.adjacency_matrix()
    deg = a.sum(axis=1)
    dangling = deg == 0
    inv_deg = np.divide(1.0, deg, out=np.zeros(n), where=~dangling)
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        spread = a.T @ (x * inv_deg)
        x_new = damping * (spread + x[dangling].sum() / n) + (1.0 - damping) / n
        x_new /= x_new.sum()
        err = np.abs(x_new - x).sum()
        x = x_new
        if err < tol:
            break
    return CentralityScores("pagerank", x)


def centrality(g: Graph, method: str) -> CentralityScores:
    if method == "degree":
        return degree(g)
    if method == "betweenness":
        return betweenness(g)
    if method == "pagerank":
        return pagerank(g)
    raise ValueError(f"unknown centrality method {method!r}; expected one of {CENTRALITY_METHODS}")


def round_half_up(x: float) -> int:
    """Round-half-up for the non-negative fraction-to-count conversions."""
    # small epsilon absorbs representation error such as 100 * 0.35 = 34.99999...
    return int(np.floor(x + 0.5 + 1e-9))
