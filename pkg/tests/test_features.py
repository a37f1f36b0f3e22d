from itertools import combinations

import numpy as np

from kronmoments.features import (
    FeatureCounts,
    count_degree_features,
    count_features,
    count_triangles,
)
from kronmoments.graph_io import SimpleGraph


def graph_from_edges(n, edges):
    return SimpleGraph(n, np.array(edges, dtype=np.int64).reshape(-1, 2))


def brute_force_counts(adj):
    """Direct enumeration over pairs, wedge pairs, claw triples, triangles."""
    n = adj.shape[0]
    edges = int(np.triu(adj, 1).sum())
    wedges = claws = triangles = 0
    if n >= 3:
        pairs = np.array(list(combinations(range(n), 2)))
        wedges = int((adj[:, pairs[:, 0]] & adj[:, pairs[:, 1]]).sum())
        trips = np.array(list(combinations(range(n), 3)))
        triangles = int(
            (adj[trips[:, 0], trips[:, 1]]
             & adj[trips[:, 0], trips[:, 2]]
             & adj[trips[:, 1], trips[:, 2]]).sum()
        )
    if n >= 4:
        trips = np.array(list(combinations(range(n), 3)))
        claws = int(
            (adj[:, trips[:, 0]] & adj[:, trips[:, 1]] & adj[:, trips[:, 2]]).sum()
        )
    return edges, wedges, claws, triangles


def test_triangle_k3():
    g = graph_from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert count_degree_features(g) == (3, 3, 0)
    assert count_triangles(g) == 1


def test_star_three_leaves():
    g = graph_from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert count_degree_features(g) == (3, 3, 1)
    assert count_triangles(g) == 0


def test_k4_and_c4():
    k4 = graph_from_edges(4, list(combinations(range(4), 2)))
    assert count_triangles(k4) == 4
    c4 = graph_from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    assert count_triangles(c4) == 0


def test_empty_graph():
    g = SimpleGraph(0, np.zeros((0, 2), dtype=np.int64))
    assert count_features(g) == FeatureCounts(0, 0, 0, 0, 0)
    g = SimpleGraph(5, np.zeros((0, 2), dtype=np.int64))
    assert count_features(g) == FeatureCounts(5, 0, 0, 0, 0)


def test_random_graphs_match_enumeration():
    rng = np.random.default_rng(60)
    for _ in range(40):
        n = int(rng.integers(4, 61))
        p = float(rng.uniform(0.05, 0.6))
        adj = np.triu(rng.random((n, n)) < p, 1)
        adj = adj | adj.T
        g = SimpleGraph(n, np.argwhere(np.triu(adj, 1)))
        fc = count_features(g)
        assert (fc.edges, fc.hairpins, fc.tripins, fc.triangles) == \
            brute_force_counts(adj)
        assert 3 * fc.triangles <= fc.hairpins


def test_dense_graph_triangles():
    # near-complete graph exercises the high-degree intersection path
    n = 30
    adj = ~np.eye(n, dtype=bool)
    adj[0, 1] = adj[1, 0] = False
    g = SimpleGraph(n, np.argwhere(np.triu(adj, 1)))
    expected = n * (n - 1) * (n - 2) // 6 - (n - 2)
    assert count_triangles(g) == expected


def test_counts_are_python_ints():
    g = graph_from_edges(4, [(0, 1), (0, 2), (0, 3)])
    fc = count_features(g)
    for name in ("edges", "hairpins", "tripins", "triangles"):
        assert isinstance(fc.get(name), int)
