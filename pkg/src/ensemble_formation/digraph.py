"""Directed graphs, strong connectivity and the cycle-aware diameter.

Vertices are 1-indexed throughout, both in memory and in the JSON format
``{"n": 3, "edges": [[1, 2], [2, 3], [3, 1]]}``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

UNREACHABLE = -1


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Digraph:
    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if int(self.n) < 1:
            raise GraphError(f"need at least one vertex, got n={self.n}")
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if i == j:
                raise GraphError(f"self-loop at vertex {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise GraphError(f"edge ({i}, {j}) out of range 1..{self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", edges)

    @property
    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.sorted_edges]}

    @classmethod
    def from_dict(cls, d: dict) -> "Digraph":
        return cls(d["n"], frozenset(tuple(e) for e in d["edges"]))

    def __repr__(self):
        return f"Digraph(n={self.n}, edges={self.sorted_edges})"


def cycle_graph(n: int) -> Digraph:
    return Digraph(n, frozenset((i, i % n + 1) for i in range(1, n + 1)))


def complete_graph(n: int) -> Digraph:
    return Digraph(n, frozenset((i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j))


def path_graph(n: int) -> Digraph:
    return Digraph(n, frozenset((i, i + 1) for i in range(1, n)))


def reversed_graph(g: Digraph) -> Digraph:
    return Digraph(g.n, frozenset((j, i) for i, j in g.edges))


def all_digraphs(n: int):
    """Every digraph on n labelled vertices (2^(n(n-1)) of them)."""
    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    for mask in range(1 << len(pairs)):
        yield Digraph(n, frozenset(p for b, p in enumerate(pairs) if mask >> b & 1))


def random_strongly_connected(n: int, rng: np.random.Generator, p: float = 0.35) -> Digraph:
    """Rejection-sample a strongly connected digraph with edge density ``p``."""
    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    while True:
        mask = rng.random(len(pairs)) < p
        g = Digraph(n, frozenset(e for e, keep in zip(pairs, mask) if keep))
        if is_strongly_connected(g):
            return g


def _check_vertex(g: Digraph, i: int):
    if not 1 <= i <= g.n:
        raise GraphError(f"vertex {i} out of range 1..{g.n}")


def out_neighbors(g: Digraph, i: int) -> set[int]:
    _check_vertex(g, i)
    return {j for a, j in g.edges if a == i}


def _adjacency(g: Digraph, reverse: bool = False) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {v: [] for v in range(1, g.n + 1)}
    for i, j in g.edges:
        if reverse:
            adj[j].append(i)
        else:
            adj[i].append(j)
    for v in adj:
        adj[v].sort()
    return adj


def _bfs(adj: dict[int, list[int]], source: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def is_strongly_connected(g: Digraph) -> bool:
    forward = _bfs(_adjacency(g), 1)
    backward = _bfs(_adjacency(g, reverse=True), 1)
    return len(forward) == g.n and len(backward) == g.n


def distance_matrix(g: Digraph) -> np.ndarray:
    """Shortest directed path lengths, 0-indexed.

    The diagonal holds the length of the shortest cycle through each vertex
    (not 0). Unreachable entries are ``UNREACHABLE``.
    """
    adj = _adjacency(g)
    D = np.full((g.n, g.n), UNREACHABLE, dtype=int)
    for s in range(1, g.n + 1):
        for v, d in _bfs(adj, s).items():
            if v != s:
                D[s - 1, v - 1] = d
    for s in range(1, g.n + 1):
        back = [D[w - 1, s - 1] for w in adj[s] if D[w - 1, s - 1] != UNREACHABLE]
        if back:
            D[s - 1, s - 1] = 1 + min(back)
    return D


def diameter(g: Digraph) -> int:
    """Largest shortest-path length over all ordered pairs, self-pairs included."""
    if not is_strongly_connected(g):
        raise GraphError("diameter is only defined for strongly connected digraphs")
    if g.n == 1:
        raise GraphError("a single vertex has no cycle through it")
    return int(distance_matrix(g).max())


def _greedy_path(adj, dist_to_target: dict[int, int], start: int, target: int) -> list[int]:
    # lexicographically smallest among the shortest: always take the smallest
    # neighbour that is one step closer
    path = [start]
    v = start
    while v != target:
        v = min(w for w in adj[v] if dist_to_target.get(w, -2) == dist_to_target[v] - 1)
        path.append(v)
    return path


def shortest_path(g: Digraph, i: int, j: int) -> list[int]:
    """Minimum-length path from i to j; for i == j, a minimum-length cycle.

    Ties are broken towards the lexicographically smallest vertex sequence.
    """
    _check_vertex(g, i)
    _check_vertex(g, j)
    adj = _adjacency(g)
    to_j = _bfs(_adjacency(g, reverse=True), j)
    if i != j:
        if i not in to_j:
            raise GraphError(f"no path from {i} to {j}")
        return _greedy_path(adj, to_j, i, j)
    candidates = [w for w in adj[i] if w in to_j]
    if not candidates:
        raise GraphError(f"no cycle through {i}")
    best = min(to_j[w] for w in candidates)
    first = min(w for w in candidates if to_j[w] == best)
    return [i] + _greedy_path(adj, to_j, first, j)


def cycle_through_edge(g: Digraph, edge: tuple[int, int]) -> list[int]:
    """Shortest cycle whose first edge is ``edge``, as a closed vertex list."""
    j, k = edge
    if not g.has_edge(j, k):
        raise GraphError(f"edge ({j}, {k}) is not in the graph")
    return [j] + shortest_path(g, k, j)


def induced_subgraph(g: Digraph, vertices) -> tuple[Digraph, dict[int, int]]:
    """Subgraph induced by ``vertices``, relabelled 1..k in ascending order.

    Returns the graph and the map old label -> new label.
    """
    keep = sorted(set(vertices))
    if not keep:
        raise GraphError("empty vertex subset")
    for v in keep:
        _check_vertex(g, v)
    index = {v: a + 1 for a, v in enumerate(keep)}
    edges = frozenset((index[i], index[j]) for i, j in g.edges if i in index and j in index)
    return Digraph(len(keep), edges), index


def is_valid_path(g: Digraph, path: list[int]) -> bool:
    """Consecutive pairs are edges and all vertices but a closing endpoint are distinct."""
    if len(path) < 2:
        return False
    if any(not g.has_edge(a, b) for a, b in zip(path, path[1:])):
        return False
    body = path[:-1] if path[0] == path[-1] else path
    return len(set(body)) == len(body)


@dataclass(frozen=True)
class GraphSchedule:
    """Right-continuous piecewise-constant graph over [0, T]."""

    segments: tuple  # ((switch_time, Digraph), ...)
    T: float

    def __post_init__(self):
        segs = tuple((float(t), g) for t, g in self.segments)
        if not segs:
            raise GraphError("schedule needs at least one segment")
        if segs[0][0] != 0.0:
            raise GraphError("first switch time must be 0")
        times = [t for t, _ in segs]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise GraphError("switch times must be strictly increasing")
        if self.T <= 0 or times[-1] >= self.T:
            raise GraphError("horizon must be positive and exceed every switch time")
        n = segs[0][1].n
        for t, g in segs:
            if g.n != n:
                raise GraphError("all graphs in a schedule must share the vertex count")
            if not is_strongly_connected(g):
                raise GraphError(f"graph at t={t} is not strongly connected")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "T", float(self.T))

    @classmethod
    def static(cls, g: Digraph, T: float) -> "GraphSchedule":
        return cls(((0.0, g),), T)

    @property
    def switch_times(self) -> list[float]:
        return [t for t, _ in self.segments]

    def intervals(self) -> list[tuple[float, float, Digraph]]:
        ends = self.switch_times[1:] + [self.T]
        return [(t, e, g) for (t, g), e in zip(self.segments, ends)]

    def segment_index(self, t: float) -> int:
        if not 0.0 <= t <= self.T:
            raise GraphError(f"t={t} outside [0, {self.T}]")
        idx = 0
        for k, (s, _) in enumerate(self.segments):
            if s <= t:
                idx = k
        return idx

    def to_dict(self) -> dict:
        return {"T": self.T, "segments": [{"t": t, "graph": g.to_dict()} for t, g in self.segments]}

    @classmethod
    def from_dict(cls, d: dict) -> "GraphSchedule":
        return cls(tuple((s["t"], Digraph.from_dict(s["graph"])) for s in d["segments"]), d["T"])


def graph_at(s: GraphSchedule, t: float) -> Digraph:
    return s.segments[s.segment_index(t)][1]


def strongly_connected_digraphs(n: int):
    return (g for g in all_digraphs(n) if is_strongly_connected(g))
