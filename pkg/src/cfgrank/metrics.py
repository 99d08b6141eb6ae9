"""Exact graph properties: closeness, betweenness, degree centrality,
shortest-path statistics, and density.

Centralities and path statistics operate on the undirected view of a
connected graph; callers hand in the largest weak component. Density alone
is defined on the full directed graph.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .graph import Cfg


class DisconnectedGraphError(ValueError):
    def __init__(self):
        super().__init__("centrality requires a connected graph; pass one component")


@dataclass(frozen=True)
class PathStats:
    min: float
    max: float
    mean: float
    median: float
    std: float


def _bfs_distances(adj: list[list[int]], source: int) -> list[int]:
    dist = [-1] * len(adj)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def closeness(g: Cfg) -> dict[int, float]:
    """Normalized closeness (n-1)/sum of hop distances, per node."""
    n = g.node_count
    if n == 1:
        return {0: 0.0}
    adj = g.undirected_adjacency()
    scores: dict[int, float] = {}
    for u in range(n):
        dist = _bfs_distances(adj, u)
        if any(d < 0 for d in dist):
            raise DisconnectedGraphError()
        scores[u] = (n - 1) / sum(dist)
    return scores


def betweenness(g: Cfg) -> dict[int, float]:
    """Brandes betweenness, endpoints excluded, normalized to [0, 1]."""
    n = g.node_count
    if n < 3:
        scores = {u: 0.0 for u in range(n)}
        if n > 1:
            # still demand connectivity so the contract matches closeness
            adj = g.undirected_adjacency()
            if any(d < 0 for d in _bfs_distances(adj, 0)):
                raise DisconnectedGraphError()
        return scores
    adj = g.undirected_adjacency()
    raw = [0.0] * n
    for s in range(n):
        # single-source shortest-path counts
        dist = [-1] * n
        sigma = [0] * n
        preds: list[list[int]] = [[] for _ in range(n)]
        dist[s] = 0
        sigma[s] = 1
        order: list[int] = []
        queue = deque([s])
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
                if dist[v] == dist[u] + 1:
                    sigma[v] += sigma[u]
                    preds[v].append(u)
        if any(d < 0 for d in dist):
            raise DisconnectedGraphError()
        # dependency accumulation in reverse BFS order
        delta = [0.0] * n
        for v in reversed(order):
            for u in preds[v]:
                delta[u] += sigma[u] / sigma[v] * (1.0 + delta[v])
            if v != s:
                raw[v] += delta[v]
    # undirected: every pair contributes from both endpoints
    norm = (n - 1) * (n - 2)
    return {u: raw[u] / norm for u in range(n)}


def degree_centrality(g: Cfg) -> dict[int, float]:
    """Undirected degree over n-1; a self-loop adds 1 to its node's degree."""
    n = g.node_count
    if n == 1:
        return {0: 0.0}
    adj = g.undirected_adjacency()
    loops = g.self_loop_nodes()
    return {u: (len(adj[u]) + (1 if u in loops else 0)) / (n - 1) for u in range(n)}


def shortest_path_stats(g: Cfg) -> PathStats:
    """Summary statistics of hop distances over all unordered node pairs."""
    n = g.node_count
    if n == 1:
        return PathStats(0.0, 0.0, 0.0, 0.0, 0.0)
    adj = g.undirected_adjacency()
    distances: list[int] = []
    for u in range(n):
        dist = _bfs_distances(adj, u)
        if any(d < 0 for d in dist):
            raise DisconnectedGraphError()
        distances.extend(dist[u + 1:])
    return summary_stats([float(d) for d in distances])


def density(g: Cfg) -> float:
    """Directed simple-edge density |E| / (n(n-1)); self-loops count in |E|."""
    n = g.node_count
    if n < 2:
        return 0.0
    return g.edge_count / (n * (n - 1))


def summary_stats(values: list[float]) -> PathStats:
    """min/max/mean/median/population-std of a non-empty value list."""
    if not values:
        raise ValueError("summary_stats needs at least one value")
    ordered = sorted(values)
    k = len(ordered)
    mean = sum(ordered) / k
    if k % 2:
        median = ordered[k // 2]
    else:
        median = (ordered[k // 2 - 1] + ordered[k // 2]) / 2
    var = sum((v - mean) ** 2 for v in ordered) / k
    return PathStats(ordered[0], ordered[-1], mean, median, math.sqrt(var))
