"""Snapshot representation and read-only graph queries.

A snapshot holds one semester's node attribute assignments plus two
undirected edge sets over the same nodes: the behavioral network (weighted
by communication volume) and the cognitive network (binary friendship
nominations). Snapshots are immutable after construction and all queries
here are safe to run concurrently.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

BEHAVIORAL = "behavioral"
COGNITIVE = "cognitive"
NETWORK_KINDS = (BEHAVIORAL, COGNITIVE)

# weight contributed by a single communication event
CALL_WEIGHT = 10
TEXT_WEIGHT = 1


def check_kind(kind: str) -> str:
    if kind not in NETWORK_KINDS:
        raise ValueError(f"unknown network kind {kind!r}; expected one of {NETWORK_KINDS}")
    return kind


def edge_weight(calls: int, texts: int) -> int:
    """Behavioral edge weight: 10 per call plus 1 per text message."""
    if calls < 0 or texts < 0:
        raise ValueError("event counts must be non-negative")
    if calls == 0 and texts == 0:
        raise ValueError("an edge with no events should not exist")
    return CALL_WEIGHT * calls + TEXT_WEIGHT * texts


def node_pair(u: str, v: str) -> tuple[str, str]:
    """Canonical unordered pair; rejects self-loops."""
    if u == v:
        raise ValueError(f"self-loop on node {u!r}")
    return (u, v) if u < v else (v, u)


@dataclass
class Snapshot:
    """One semester's networks and node attributes.

    ``nodes`` maps node id to its attribute assignment (attribute name to
    value); ``behavioral_edges`` maps canonical node pairs to positive
    integer weights; ``cognitive_edges`` is a set of canonical node pairs.
    """

    semester: int
    nodes: dict[str, dict[str, str]]
    behavioral_edges: dict[tuple[str, str], int]
    cognitive_edges: set[tuple[str, str]]
    _adjacency: dict = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        for (u, v), weight in self.behavioral_edges.items():
            self._check_pair(u, v)
            if weight < 1:
                raise ValueError(f"behavioral edge {(u, v)} has weight {weight} < 1")
        for u, v in self.cognitive_edges:
            self._check_pair(u, v)
        adjacency = {BEHAVIORAL: {n: set() for n in self.nodes},
                     COGNITIVE: {n: set() for n in self.nodes}}
        for u, v in self.behavioral_edges:
            adjacency[BEHAVIORAL][u].add(v)
            adjacency[BEHAVIORAL][v].add(u)
        for u, v in self.cognitive_edges:
            adjacency[COGNITIVE][u].add(v)
            adjacency[COGNITIVE][v].add(u)
        self._adjacency = adjacency

    def _check_pair(self, u: str, v: str):
        if u == v:
            raise ValueError(f"self-loop on node {u!r} in semester {self.semester}")
        if u > v:
            raise ValueError(f"edge {(u, v)} is not in canonical order")
        if u not in self.nodes or v not in self.nodes:
            raise ValueError(f"edge {(u, v)} references a node outside the snapshot")

    @property
    def n(self) -> int:
        return len(self.nodes)

    def edge_count(self, kind: str) -> int:
        return len(self.edge_set(kind))

    def edge_set(self, kind: str):
        check_kind(kind)
        if kind == BEHAVIORAL:
            return self.behavioral_edges.keys()
        return self.cognitive_edges

    def has_edge(self, kind: str, u: str, v: str) -> bool:
        return node_pair(u, v) in self.edge_set(kind)

    def weight(self, u: str, v: str) -> int | None:
        """Behavioral weight of the dyad, or None when no edge exists."""
        return self.behavioral_edges.get(node_pair(u, v))

    def neighbors(self, kind: str, node: str) -> set[str]:
        check_kind(kind)
        try:
            return self._adjacency[kind][node]
        except KeyError:
            raise KeyError(f"unknown node {node!r} in semester {self.semester}") from None

    def degree(self, kind: str, node: str) -> int:
        return len(self.neighbors(kind, node))

    def adjacency(self, kind: str) -> Mapping[str, set[str]]:
        check_kind(kind)
        return self._adjacency[kind]

    def attribute_value(self, node: str, attribute: str) -> str | None:
        return self.nodes[node].get(attribute)


def common_neighbors(snapshot: Snapshot, kind: str, u: str, v: str) -> int:
    """Number of nodes adjacent to both u and v in the selected network."""
    if u == v:
        raise ValueError("common_neighbors requires two distinct nodes")
    return len(snapshot.neighbors(kind, u) & snapshot.neighbors(kind, v))


def bfs_within(adjacency: Mapping[str, Iterable[str]], source: str, max_hops: int) -> set[str]:
    """Nodes at shortest-path distance 1..max_hops from source (source excluded)."""
    if max_hops < 1:
        raise ValueError("max_hops must be at least 1")
    seen = {source}
    frontier = deque([(source, 0)])
    reached: set[str] = set()
    while frontier:
        node, dist = frontier.popleft()
        if dist == max_hops:
            continue
        for other in adjacency[node]:
            if other not in seen:
                seen.add(other)
                reached.add(other)
                frontier.append((other, dist + 1))
    return reached


def within_hops(snapshot: Snapshot, kind: str, node: str, max_hops: int) -> set[str]:
    """All nodes reachable from ``node`` in at most ``max_hops`` edges."""
    snapshot.neighbors(kind, node)  # raises on unknown node
    return bfs_within(snapshot.adjacency(kind), node, max_hops)
