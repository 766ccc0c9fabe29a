import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import complete_graph, path_graph, star_graph
from infodisorder.graph import (
    Graph,
    betweenness,
    degree,
    gen_erdos_renyi,
    gen_preferential_attachment,
    gen_small_world,
    pagerank,
    round_half_up,
)
from oracles import brute_force_betweenness


def assert_simple(g: Graph):
    seen = set()
    for u, v in g.edges:
        assert u != v
        assert (u, v) not in seen
        seen.add((u, v))
    adj = g.adjacency
    for u in range(g.n):
        for v in adj[u]:
            assert u in adj[v]
    assert len(seen) == g.edge_count


class TestErdosRenyi:
    def test_table_defaults_give_400_edges(self, rng):
        g = gen_erdos_renyi(100, 8, rng)
        assert g.edge_count == 400
        assert_simple(g)

    def test_two_nodes_single_edge(self, rng):
        assert gen_erdos_renyi(2, 1, rng).edges == [(0, 1)]

    def test_zero_degree(self, rng):
        g = gen_erdos_renyi(10, 0, rng)
        assert g.edge_count == 0 and g.n == 10

    def test_rejects_too_many_edges(self, rng):
        with pytest.raises(ValueError):
            gen_erdos_renyi(5, 5, rng)

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(2, 40), frac=st.floats(0, 1), seed=st.integers(0, 2**32))
    def test_edge_count_exact(self, n, frac, seed):
        k = frac * (n - 1)
        g = gen_erdos_renyi(n, k, np.random.default_rng(seed))
        assert g.edge_count == round_half_up(n * k / 2)
        assert_simple(g)

    def test_same_seed_same_graph(self):
        a = gen_erdos_renyi(50, 6, np.random.default_rng(9))
        b = gen_erdos_renyi(50, 6, np.random.default_rng(9))
        assert a == b and a.edges == b.edges


class TestSmallWorld:
    def test_no_rewiring_is_ring_lattice(self, rng):
        g = gen_small_world(10, 4, 0.0, rng)
        assert list(g.degrees()) == [4] * 10
        assert g.has_edge(0, 1) and g.has_edge(0, 2) and g.has_edge(0, 9)

    def test_full_rewiring_keeps_edge_count(self, rng):
        g = gen_small_world(10, 4, 1.0, rng)
        assert g.edge_count == 20
        assert_simple(g)

    def test_odd_degree_rejected(self, rng):
        with pytest.raises(ValueError):
            gen_small_world(10, 3, 0.1, rng)

    def test_degrees_concentrate_near_k(self):
        means, spreads = [], []
        for seed in range(100):
            g = gen_small_world(100, 8, 0.1, np.random.default_rng(seed))
            assert g.edge_count == 400
            assert_simple(g)
            d = g.degrees()
            means.append(d.mean())
            spreads.append(d.std())
        assert np.allclose(means, 8.0)
        assert np.mean(spreads) < 1.5


class TestPreferentialAttachment:
    def test_tree(self, rng):
        g = gen_preferential_attachment(5, 1, rng)
        assert g.edge_count == 4
        assert_simple(g)

    def test_edge_count_rule(self, rng):
        g = gen_preferential_attachment(100, 4, rng)
        assert g.edge_count == 4 * 96 + 6
        assert_simple(g)

    def test_two_nodes(self, rng):
        assert gen_preferential_attachment(2, 1, rng).edges == [(0, 1)]

    def test_rejects_m_ge_n(self, rng):
        with pytest.raises(ValueError):
            gen_preferential_attachment(4, 4, rng)

    def test_hubs_emerge(self):
        g = gen_preferential_attachment(500, 2, np.random.default_rng(3))
        assert g.degrees().max() > 4 * g.degrees().mean()


class TestBetweenness:
    def test_path(self):
        assert list(betweenness(path_graph(3)).scores) == [0.0, 1.0, 0.0]

    def test_complete(self):
        assert np.all(betweenness(complete_graph(4)).scores == 0.0)

    def test_star_center_counts_leaf_pairs(self):
        s = betweenness(star_graph(5)).scores
        assert s[0] == 10.0
        assert np.all(s[1:] == 0.0)

    def test_matches_brute_force_on_small_graphs(self):
        for seed in range(60):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(2, 9))
            g = gen_erdos_renyi(n, float(rng.uniform(0, n - 1)), rng)
            assert np.allclose(betweenness(g).scores, brute_force_betweenness(g.adjacency), atol=1e-12)

    def test_cycle_shares_evenly(self):
        g = Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
        # each opposite pair has two shortest paths, each through one node
        assert np.allclose(betweenness(g).scores, 0.5)


class TestPagerank:
    def test_complete_uniform(self):
        assert np.allclose(pagerank(complete_graph(5)).scores, 0.2, atol=1e-9)

    def test_two_components(self):
        g = Graph(4, [(0, 1), (2, 3)])
        assert np.allclose(pagerank(g).scores, 0.25, atol=1e-9)

    def test_star_center_dominates(self):
        s = pagerank(star_graph(4), damping=0.85, tol=1e-14, max_iter=10_000).scores
        assert np.all(s[0] > s[1:])
        # closed form for a star with L leaves: x_c = (1-d)/n + d*L*x_l, x_l = (1-d)/n + d*x_c/L
        d, n, leaves = 0.85, 5, 4
        x_c = ((1 - d) / n + d * (1 - d) / n * leaves) / (1 - d * d)
        assert s[0] == pytest.approx(x_c, abs=1e-10)

    def test_isolated_nodes_keep_mass(self):
        g = Graph(5, [(0, 1)])
        s = pagerank(g).scores
        assert s.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(s[2:], s[2])

    def test_rejects_bad_damping(self):
        with pytest.raises(ValueError):
            pagerank(path_graph(3), damping=1.0)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32), n=st.integers(2, 30))
    def test_distribution_and_relabel_invariance(self, seed, n):
        rng = np.random.default_rng(seed)
        g = gen_erdos_renyi(n, float(rng.uniform(0, min(6, n - 1))), rng)
        s = pagerank(g).scores
        assert np.all(s >= 0) and abs(s.sum() - 1.0) < 1e-9
        perm = rng.permutation(n)
        h = Graph(n, [(int(perm[u]), int(perm[v])) for u, v in g.edges])
        assert np.allclose(pagerank(h).scores[perm], s, atol=1e-7)


class TestDegree:
    def test_path(self):
        assert list(degree(path_graph(3)).scores) == [1, 2, 1]

    def test_empty(self):
        assert np.all(degree(Graph(4)).scores == 0)

    def test_complete(self):
        assert np.all(degree(complete_graph(4)).scores == 3)


def test_ranking_breaks_ties_by_id():
    scores = degree(Graph(5, [(3, 4), (1, 2)]))
    assert list(scores.ranking()) == [1, 2, 3, 4, 0]
    assert list(scores.top(2)) == [1, 2]


def test_graph_rejects_self_loops_and_duplicates():
    g = Graph(3)
    with pytest.raises(ValueError):
        g.add_edge(1, 1)
    g.add_edge(0, 1)
    with pytest.raises(ValueError):
        g.add_edge(1, 0)


def test_round_half_up():
    assert round_half_up(2.5) == 3
    assert round_half_up(100 * 0.05) == 5
    assert round_half_up(400 * 0.35) == 140
    assert round_half_up(0.49) == 0
