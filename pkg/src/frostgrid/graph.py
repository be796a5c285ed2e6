"""Undirected weighted graphs over candidate sites, Kruskal MST, k-tree validation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoSpanningTreeError


@dataclass(frozen=True)
class WeightedGraph:
    """Edge-list graph; node ids are 0..node_count-1 and edges carry (i, j, weight) with i < j."""

    node_count: int
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(i), int(j), float(w)) for i, j, w in self.edges))
        seen = set()
        for i, j, w in self.edges:
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise ValueError(f"edge ({i},{j}) references an unknown node")
            if i >= j:
                raise ValueError(f"edge ({i},{j}) must satisfy i < j (no self-loops)")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            if not (math.isfinite(w) and w >= 0):
                raise ValueError(f"edge ({i},{j}) has invalid weight {w}")
            seen.add((i, j))

    def weight_map(self) -> dict:
        return {(i, j): w for i, j, w in self.edges}

    def edge_set(self) -> set:
        return {(i, j) for i, j, _ in self.edges}


@dataclass(frozen=True)
class TreeSolution:
    """A tree subgraph: the canonical output of MST / k-MST routines."""

    nodes: frozenset
    edges: frozenset   # (i, j) pairs with i < j
    total_weight: float


class UnionFind:
    """Disjoint sets with path compression and union by rank."""

    def __init__(self, items):
        self.parent = {x: x for x in items}
        self.rank = {x: 0 for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def complete_graph(sites) -> WeightedGraph:
    """Complete graph over points with Euclidean edge weights."""
    pts = np.asarray(sites, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 1:
        raise ValueError("need at least one 2-D point")
    n = len(pts)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    edges = [(i, j, float(dist[i, j])) for i in range(n) for j in range(i + 1, n)]
    return WeightedGraph(n, tuple(edges))


def kruskal_mst(g: WeightedGraph, nodes=None) -> TreeSolution:
    """Minimum spanning tree of the subgraph induced by ``nodes`` (default: all).

    Ties are broken by (weight, i, j) so the edge set is deterministic.
    Raises NoSpanningTreeError when the induced subgraph is disconnected.
    """
    if nodes is None:
        nodes = range(g.node_count)
    node_set = set(int(v) for v in nodes)
    if not node_set:
        raise ValueError("node set must be non-empty")
    if not node_set <= set(range(g.node_count)):
        raise ValueError("node set references unknown nodes")

    uf = UnionFind(node_set)
    chosen = []
    total = 0.0
    for i, j, w in sorted(g.edges, key=lambda e: (e[2], e[0], e[1])):
        if i in node_set and j in node_set and uf.union(i, j):
            chosen.append((i, j))
            total += w
            if len(chosen) == len(node_set) - 1:
                break
    if len(chosen) != len(node_set) - 1:
        raise NoSpanningTreeError(
            f"induced subgraph on {len(node_set)} nodes is disconnected"
        )
    return TreeSolution(frozenset(node_set), frozenset(chosen), total)


def validate_ktree(g: WeightedGraph, sol: TreeSolution, k: int) -> bool:
    """True iff ``sol`` is a tree with exactly k nodes using only edges of ``g``.

    Returns False (never raises) for malformed input: wrong counts, edges
    absent from the graph, endpoints outside the node set, cycles, or a
    disconnected edge set.
    """
    try:
        nodes = set(sol.nodes)
        edges = set(sol.edges)
    except TypeError:
        return False
    if len(nodes) != k or len(edges) != k - 1:
        return False
    g_edges = g.edge_set()
    for e in edges:
        if e not in g_edges:
            return False
        i, j = e
        if i not in nodes or j not in nodes:
            return False
    uf = UnionFind(nodes)
    for i, j in edges:
        if not uf.union(i, j):
            return False  # cycle
    # k-1 successful unions over k nodes => connected and acyclic
    return True
