"""Canonical in-memory control-flow graph and component decomposition.

A Cfg is an immutable directed graph whose nodes are basic blocks, indexed
densely 0..n-1 in ascending address order. Edges are deduplicated pairs of
node ids; self-loops are kept.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass


class GraphError(ValueError):
    """Base class for CFG construction and query errors."""


class EmptyGraphError(GraphError):
    pass


class DanglingEdgeError(GraphError):
    def __init__(self, address: int):
        super().__init__(f"edge endpoint address {address} does not match any block")
        self.address = address


class UnknownNodeError(GraphError):
    def __init__(self, node: int):
        super().__init__(f"node id {node} is not in the graph")
        self.node = node


@dataclass(frozen=True)
class BasicBlock:
    address: int
    size: int = 0
    instr_count: int = 0


@dataclass(frozen=True)
class Cfg:
    sample_id: str
    blocks: tuple[BasicBlock, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def node_count(self) -> int:
        return len(self.blocks)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def undirected_adjacency(self) -> list[list[int]]:
        """Neighbor lists ignoring edge direction; self-loops excluded.

        Neighbor lists are sorted so traversals are deterministic.
        """
        nbrs: list[set[int]] = [set() for _ in range(self.node_count)]
        for u, v in self.edges:
            if u != v:
                nbrs[u].add(v)
                nbrs[v].add(u)
        return [sorted(s) for s in nbrs]

    def self_loop_nodes(self) -> set[int]:
        return {u for u, v in self.edges if u == v}


@dataclass(frozen=True)
class ComponentLabeling:
    component_of: dict[int, int]
    component_count: int
    largest_component: frozenset[int]


def build_cfg(
    sample_id: str,
    blocks: list[BasicBlock],
    raw_edges: list[tuple[int, int]],
) -> Cfg:
    """Assemble a Cfg from blocks and address-level edges.

    Blocks get dense ids in ascending address order; duplicate edges collapse;
    self-loops survive. Raises DanglingEdgeError if an edge endpoint matches
    no block address.
    """
    if not blocks:
        raise EmptyGraphError("a CFG needs at least one basic block")
    ordered = tuple(sorted(blocks, key=lambda b: b.address))
    id_of: dict[int, int] = {}
    for i, b in enumerate(ordered):
        if b.address in id_of:
            raise GraphError(f"duplicate block address {b.address}")
        id_of[b.address] = i
    edge_set: set[tuple[int, int]] = set()
    for src, dst in raw_edges:
        if src not in id_of:
            raise DanglingEdgeError(src)
        if dst not in id_of:
            raise DanglingEdgeError(dst)
        edge_set.add((id_of[src], id_of[dst]))
    return Cfg(sample_id=sample_id, blocks=ordered, edges=tuple(sorted(edge_set)))


def weak_components(g: Cfg) -> ComponentLabeling:
    """Label connected components of the undirected view of g.

    Component indices are dense and ordered by their smallest node id, so
    the labeling is deterministic. The largest component breaks size ties
    toward the lowest index.
    """
    adj = g.undirected_adjacency()
    component_of: dict[int, int] = {}
    members: list[list[int]] = []
    for start in range(g.node_count):
        if start in component_of:
            continue
        label = len(members)
        queue = deque([start])
        component_of[start] = label
        found = [start]
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in component_of:
                    component_of[v] = label
                    found.append(v)
                    queue.append(v)
        members.append(found)
    largest = max(members, key=len) if members else []
    # max() keeps the first of equal-size components, i.e. the lowest index
    return ComponentLabeling(
        component_of=component_of,
        component_count=len(members),
        largest_component=frozenset(largest),
    )


def induced_subgraph(g: Cfg, nodes: set[int]) -> Cfg:
    """Subgraph on `nodes` with ids re-densified in the original order."""
    for n in nodes:
        if not 0 <= n < g.node_count:
            raise UnknownNodeError(n)
    if not nodes:
        raise EmptyGraphError("induced subgraph needs at least one node")
    kept = sorted(nodes)
    new_id = {old: new for new, old in enumerate(kept)}
    blocks = tuple(g.blocks[i] for i in kept)
    edges = tuple(
        sorted((new_id[u], new_id[v]) for u, v in g.edges if u in nodes and v in nodes)
    )
    return Cfg(sample_id=g.sample_id, blocks=blocks, edges=edges)
