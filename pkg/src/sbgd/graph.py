"""Directed acyclic multigraphs and the path oracles built on them.

Edges are addressed by a dense integer id (their position in the edge list),
so parallel edges are first class. A path is a tuple of edge ids in travel
order. Every search breaks ties toward the lowest edge id, which keeps whole
experiments replayable.
"""
from __future__ import annotations

from collections import deque
from typing import Sequence

import numpy as np

from .errors import CapExceeded, CycleDetected, InvalidNode, NoPositivePath, Unreachable

Path = tuple[int, ...]

# Shared "positive support" threshold for fractional flows.
EPS_FLOW = 1e-12


class Dag:
    """Immutable directed acyclic multigraph.

    Construct through :func:`build_dag`, which rejects cycles.
    """

    __slots__ = ("node_count", "tails", "heads", "out_edges", "in_edges", "topo_order")

    def __init__(self, node_count: int, edges: Sequence[tuple[int, int]]):
        self.node_count = int(node_count)
        self.tails = tuple(int(u) for u, _ in edges)
        self.heads = tuple(int(v) for _, v in edges)
        out_edges: list[list[int]] = [[] for _ in range(self.node_count)]
        in_edges: list[list[int]] = [[] for _ in range(self.node_count)]
        for e, (u, v) in enumerate(zip(self.tails, self.heads)):
            out_edges[u].append(e)
            in_edges[v].append(e)
        self.out_edges = tuple(tuple(lst) for lst in out_edges)
        self.in_edges = tuple(tuple(lst) for lst in in_edges)
        self.topo_order = _topological_order(self)

    @property
    def m(self) -> int:
        return len(self.tails)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.tails, self.heads))

    def path_nodes(self, path: Path) -> list[int]:
        if not path:
            return []
        return [self.tails[path[0]]] + [self.heads[e] for e in path]

    def is_path(self, path: Path, s: int, t: int) -> bool:
        """True if ``path`` is a simple directed s->t walk."""
        if not path:
            return False
        if self.tails[path[0]] != s or self.heads[path[-1]] != t:
            return False
        for a, b in zip(path, path[1:]):
            if self.heads[a] != self.tails[b]:
                return False
        nodes = self.path_nodes(path)
        return len(set(nodes)) == len(nodes)

    def indicator(self, path: Path) -> np.ndarray:
        x = np.zeros(self.m)
        x[list(path)] = 1.0
        return x

    def __repr__(self) -> str:
        return f"Dag(node_count={self.node_count}, m={self.m})"


def _topological_order(g: Dag) -> tuple[int, ...]:
    indeg = [len(g.in_edges[v]) for v in range(g.node_count)]
    queue = deque(v for v in range(g.node_count) if indeg[v] == 0)
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for e in g.out_edges[u]:
            v = g.heads[e]
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    if len(order) != g.node_count:
        raise CycleDetected("edge list contains a directed cycle")
    return tuple(order)


def build_dag(nodes: int, edge_list: Sequence[Sequence[int]]) -> Dag:
    if nodes < 2:
        raise InvalidNode(f"need at least 2 nodes, got {nodes}")
    edges = []
    for i, pair in enumerate(edge_list):
        u, v = int(pair[0]), int(pair[1])
        if not (0 <= u < nodes and 0 <= v < nodes):
            raise InvalidNode(f"edge {i} = ({u}, {v}) has an endpoint outside 0..{nodes - 1}")
        if u == v:
            raise CycleDetected(f"edge {i} is a self-loop at node {u}")
        edges.append((u, v))
    return Dag(nodes, edges)


def _check_node(g: Dag, v: int) -> None:
    if not 0 <= v < g.node_count:
        raise InvalidNode(f"node {v} outside 0..{g.node_count - 1}")


def forward_reach(g: Dag, s: int, allowed=None) -> np.ndarray:
    """Nodes reachable from ``s``, optionally only through edges where ``allowed[e]``."""
    seen = np.zeros(g.node_count, dtype=bool)
    seen[s] = True
    stack = [s]
    while stack:
        u = stack.pop()
        for e in g.out_edges[u]:
            if allowed is not None and not allowed[e]:
                continue
            v = g.heads[e]
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return seen


def backward_reach(g: Dag, t: int, allowed=None) -> np.ndarray:
    """Nodes that can reach ``t``, optionally only through edges where ``allowed[e]``."""
    seen = np.zeros(g.node_count, dtype=bool)
    seen[t] = True
    stack = [t]
    while stack:
        v = stack.pop()
        for e in g.in_edges[v]:
            if allowed is not None and not allowed[e]:
                continue
            u = g.tails[e]
            if not seen[u]:
                seen[u] = True
                stack.append(u)
    return seen


def active_edges(g: Dag, s: int, t: int) -> frozenset[int]:
    """Edges lying on at least one s->t path (empty if t is unreachable)."""
    _check_node(g, s)
    _check_node(g, t)
    if s == t:
        raise InvalidNode("source and sink must differ")
    fwd = forward_reach(g, s)
    bwd = backward_reach(g, t)
    return frozenset(e for e in range(g.m) if fwd[g.tails[e]] and bwd[g.heads[e]])


def shortest_path(g: Dag, s: int, t: int, weights) -> tuple[Path, float]:
    """Minimum-weight s->t path by dynamic programming over the topological order.

    At every node the lowest-id edge among the optimal ones is taken.
    """
    _check_node(g, s)
    _check_node(g, t)
    w = np.asarray(weights, dtype=float)
    if w.shape != (g.m,) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be a finite vector with one entry per edge")
    inf = float("inf")
    dist = [inf] * g.node_count
    choice = [-1] * g.node_count
    dist[t] = 0.0
    for u in reversed(g.topo_order):
        if u == t:
            continue
        best, best_e = inf, -1
        for e in g.out_edges[u]:
            d = dist[g.heads[e]]
            if d == inf:
                continue
            cand = w[e] + d
            if cand < best:
                best, best_e = cand, e
        dist[u], choice[u] = best, best_e
    if dist[s] == inf:
        raise Unreachable(f"node {t} is not reachable from {s}")
    path = []
    u = s
    while u != t:
        e = choice[u]
        path.append(e)
        u = g.heads[e]
    return tuple(path), float(sum(w[e] for e in path))


def count_paths(g: Dag, s: int, t: int) -> int:
    """Number of s->t paths (exact integer)."""
    counts = [0] * g.node_count
    counts[t] = 1
    for u in reversed(g.topo_order):
        if u == t:
            continue
        counts[u] = sum(counts[g.heads[e]] for e in g.out_edges[u])
    return counts[s]


def enumerate_paths(g: Dag, s: int, t: int, cap: int = 10**6) -> list[Path]:
    """All s->t paths, lexicographic by edge id. Small-instance oracle only."""
    _check_node(g, s)
    _check_node(g, t)
    total = count_paths(g, s, t)
    if total > cap:
        raise CapExceeded(f"{total} paths between {s} and {t} exceed cap {cap}")
    can_reach = backward_reach(g, t)
    paths: list[Path] = []

    def walk(u: int, prefix: list[int]) -> None:
        if u == t:
            paths.append(tuple(prefix))
            return
        for e in g.out_edges[u]:
            v = g.heads[e]
            if can_reach[v]:
                prefix.append(e)
                walk(v, prefix)
                prefix.pop()

    walk(s, [])
    return paths


def _greedy_walk(g: Dag, start: int, goal: int, reach_goal: np.ndarray, support) -> list[int] | None:
    # reach_goal marks nodes that reach goal inside the support, so the lowest-id
    # edge into a marked node never dead-ends; this equals a lowest-id-first DFS.
    path = []
    u = start
    while u != goal:
        for e in g.out_edges[u]:
            if support[e] and reach_goal[g.heads[e]]:
                path.append(e)
                u = g.heads[e]
                break
        else:
            return None
    return path


def find_positive_path(g: Dag, s: int, t: int, x, required_edge: int, eps: float = EPS_FLOW) -> Path:
    """A simple s->t path through ``required_edge`` using only edges with x_e > eps."""
    x = np.asarray(x, dtype=float)
    support = x > eps
    if not support[required_edge]:
        raise NoPositivePath(f"required edge {required_edge} has no positive mass")
    u, v = g.tails[required_edge], g.heads[required_edge]
    reach_u = backward_reach(g, u, support)
    reach_t = backward_reach(g, t, support)
    if not reach_u[s] or not reach_t[v]:
        raise NoPositivePath(
            f"no positive-support s->t path through edge {required_edge}; "
            "flow conservation is violated"
        )
    head = _greedy_walk(g, s, u, reach_u, support)
    tail = _greedy_walk(g, v, t, reach_t, support)
    return tuple(head + [required_edge] + tail)
