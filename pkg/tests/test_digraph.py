import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ensemble_formation.digraph import (
    UNREACHABLE,
    Digraph,
    GraphError,
    GraphSchedule,
    all_digraphs,
    complete_graph,
    cycle_graph,
    cycle_through_edge,
    diameter,
    distance_matrix,
    graph_at,
    induced_subgraph,
    is_strongly_connected,
    is_valid_path,
    path_graph,
    random_strongly_connected,
    reversed_graph,
    shortest_path,
    strongly_connected_digraphs,
)


def to_nx(g):
    h = nx.DiGraph()
    h.add_nodes_from(range(1, g.n + 1))
    h.add_edges_from(g.edges)
    return h


@st.composite
def digraphs(draw, min_n=2, max_n=6):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Digraph(n, frozenset(p for p, k in zip(pairs, keep) if k))


def test_rejects_self_loops_and_range():
    with pytest.raises(GraphError):
        Digraph(3, frozenset({(1, 1)}))
    with pytest.raises(GraphError):
        Digraph(3, frozenset({(1, 4)}))


def test_json_roundtrip():
    g = cycle_graph(5)
    assert Digraph.from_dict(g.to_dict()) == g
    assert g.to_dict()["edges"][0] == [1, 2]


def test_strong_connectivity_examples():
    assert is_strongly_connected(cycle_graph(3))
    assert not is_strongly_connected(path_graph(3))
    assert is_strongly_connected(complete_graph(4))


@settings(max_examples=200, deadline=None)
@given(digraphs())
def test_strong_connectivity_matches_networkx(g):
    assert is_strongly_connected(g) == nx.is_strongly_connected(to_nx(g))


def _closure_count(n):
    # Floyd-Warshall style transitive closure over adjacency bitmasks
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    count = 0
    for mask in range(1 << len(pairs)):
        reach = np.eye(n, dtype=bool)
        for b, (i, j) in enumerate(pairs):
            if mask >> b & 1:
                reach[i, j] = True
        for k in range(n):
            reach |= reach[:, [k]] & reach[[k], :]
        count += bool(reach.all())
    return count


def test_strongly_connected_counts():
    # labelled strongly connected digraphs: 1, 1, 18, 1606
    assert sum(1 for _ in strongly_connected_digraphs(2)) == 1
    assert sum(1 for _ in strongly_connected_digraphs(3)) == 18 == _closure_count(3)
    assert sum(1 for _ in strongly_connected_digraphs(4)) == 1606


def test_diameter_examples():
    assert diameter(cycle_graph(3)) == 3
    assert diameter(cycle_graph(4)) == 4
    assert diameter(complete_graph(4)) == 2
    with pytest.raises(GraphError):
        diameter(path_graph(3))


def _nx_distance(h, i, j):
    if i != j:
        return nx.shortest_path_length(h, i, j)
    return 1 + min(nx.shortest_path_length(h, w, i) for w in h.successors(i))


@settings(max_examples=100, deadline=None)
@given(digraphs(min_n=2, max_n=6))
def test_distances_match_networkx(g):
    if not is_strongly_connected(g):
        return
    h = to_nx(g)
    D = distance_matrix(g)
    for i in range(1, g.n + 1):
        for j in range(1, g.n + 1):
            assert D[i - 1, j - 1] == _nx_distance(h, i, j)
    assert diameter(g) == D.max()


def test_unreachable_marked():
    D = distance_matrix(path_graph(3))
    assert D[2, 0] == UNREACHABLE
    assert D[0, 0] == UNREACHABLE


@settings(max_examples=100, deadline=None)
@given(digraphs(min_n=3, max_n=6))
def test_shortest_paths_are_valid_and_minimal(g):
    if not is_strongly_connected(g):
        return
    D = distance_matrix(g)
    for i in range(1, g.n + 1):
        for j in range(1, g.n + 1):
            p = shortest_path(g, i, j)
            assert p[0] == i and p[-1] == j
            assert is_valid_path(g, p)
            assert len(p) - 1 == D[i - 1, j - 1]


def test_shortest_path_tie_break():
    g = Digraph(4, frozenset({(1, 2), (1, 3), (2, 4), (3, 4), (4, 1)}))
    assert shortest_path(g, 1, 4) == [1, 2, 4]
    assert shortest_path(g, 1, 1) == [1, 2, 4, 1]


@settings(max_examples=100, deadline=None)
@given(digraphs(min_n=3, max_n=5))
def test_cycle_through_edge_bound(g):
    # cycles through an edge never exceed d(G)+1 (d(G) is not always enough)
    if not is_strongly_connected(g):
        return
    d = diameter(g)
    for e in g.sorted_edges:
        c = cycle_through_edge(g, e)
        assert c[0] == c[-1] == e[0] and c[1] == e[1]
        assert is_valid_path(g, c)
        assert len(c) - 1 <= d + 1


def test_cycle_through_edge_can_exceed_diameter():
    g = Digraph(3, frozenset({(1, 2), (2, 1), (2, 3), (3, 2), (3, 1)}))
    assert diameter(g) == 2
    assert cycle_through_edge(g, (3, 1)) == [3, 1, 2, 3]


def test_induced_subgraph_relabels():
    g = cycle_graph(4)
    h, index = induced_subgraph(g, [2, 3, 4])
    assert index == {2: 1, 3: 2, 4: 3}
    assert h.edges == frozenset({(1, 2), (2, 3)})


def test_random_strongly_connected_is_reproducible():
    a = random_strongly_connected(5, np.random.default_rng(1))
    b = random_strongly_connected(5, np.random.default_rng(1))
    assert a == b and is_strongly_connected(a)


def test_all_digraphs_count():
    assert sum(1 for _ in all_digraphs(3)) == 64


def test_schedule_validation_and_lookup():
    c, r = cycle_graph(4), reversed_graph(cycle_graph(4))
    s = GraphSchedule(((0.0, c), (0.5, r)), 1.0)
    assert graph_at(s, 0.49) == c
    assert graph_at(s, 0.5) == r  # right-continuous
    assert s.intervals() == [(0.0, 0.5, c), (0.5, 1.0, r)]
    assert GraphSchedule.from_dict(s.to_dict()) == s
    with pytest.raises(GraphError):
        GraphSchedule(((0.1, c),), 1.0)
    with pytest.raises(GraphError):
        GraphSchedule(((0.0, c), (0.5, path_graph(4))), 1.0)
    with pytest.raises(GraphError):
        GraphSchedule(((0.0, c), (0.5, r), (0.5, c)), 1.0)
