"""Topology loading, validation, and shortest-path queries.

File format (UTF-8, one record per line, ``#`` starts a comment):

    node <id> <label> <role>
    link <idA> <idB> <delay_ms> <bandwidth_mbps>

Roles: consumer, router, producer, resolver, tld, nameserver.
Fields are single-space separated; every record ends with a newline.
Graphs must be connected, node ids unique, and at most one link may
join any unordered node pair.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Sequence

ROLES = frozenset({"consumer", "router", "producer", "resolver", "tld", "nameserver"})

PRESETS = ("nsfnet", "oteglobe")


class TopologyError(ValueError):
    """Raised for malformed or invalid topology input."""


@dataclass(frozen=True, slots=True)
class NodeDescriptor:
    id: int
    label: str
    role: str


@dataclass(frozen=True, slots=True)
class LinkDescriptor:
    endpoint_a: int
    endpoint_b: int
    delay_ms: float
    bandwidth_mbps: float

    @property
    def key(self) -> tuple[int, int]:
        a, b = self.endpoint_a, self.endpoint_b
        return (a, b) if a < b else (b, a)

    def other(self, node_id: int) -> int:
        if node_id == self.endpoint_a:
            return self.endpoint_b
        if node_id == self.endpoint_b:
            return self.endpoint_a
        raise TopologyError(f"node {node_id} is not on link {self.key}")


class Topology:
    """Validated, immutable-after-build network graph."""

    def __init__(self, nodes: Mapping[int, NodeDescriptor],
                 links: Mapping[tuple[int, int], LinkDescriptor]) -> None:
        self.nodes = dict(nodes)
        self.links = dict(links)
        adjacency: dict[int, list[int]] = {nid: [] for nid in self.nodes}
        for link in self.links.values():
            adjacency[link.endpoint_a].append(link.endpoint_b)
            adjacency[link.endpoint_b].append(link.endpoint_a)
        self.adjacency: dict[int, tuple[int, ...]] = {
            nid: tuple(sorted(nbrs)) for nid, nbrs in adjacency.items()
        }

    @classmethod
    def build(cls, nodes: Iterable[NodeDescriptor],
              links: Iterable[LinkDescriptor]) -> "Topology":
        """Assemble and validate a topology from descriptor lists."""
        node_map: dict[int, NodeDescriptor] = {}
        for node in nodes:
            if node.id < 0:
                raise TopologyError(f"negative node id {node.id}")
            if node.role not in ROLES:
                raise TopologyError(f"unknown role {node.role!r} for node {node.id}")
            if node.id in node_map:
                raise TopologyError(f"duplicate node id {node.id}")
            node_map[node.id] = node
        link_map: dict[tuple[int, int], LinkDescriptor] = {}
        for link in links:
            for end in (link.endpoint_a, link.endpoint_b):
                if end not in node_map:
                    raise TopologyError(f"link endpoint {end} is not a known node")
            if link.endpoint_a == link.endpoint_b:
                raise TopologyError(f"self-loop on node {link.endpoint_a}")
            if link.delay_ms < 0:
                raise TopologyError(f"negative delay on link {link.key}")
            if link.bandwidth_mbps <= 0:
                raise TopologyError(f"non-positive bandwidth on link {link.key}")
            if link.key in link_map:
                raise TopologyError(f"duplicate link between {link.key[0]} and {link.key[1]}")
            link_map[link.key] = link
        topo = cls(node_map, link_map)
        topo._check_connected()
        return topo

    def _check_connected(self) -> None:
        if not self.nodes:
            raise TopologyError("topology has no nodes")
        start = next(iter(self.nodes))
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in self.adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        if len(seen) != len(self.nodes):
            missing = len(self.nodes) - len(seen)
            raise TopologyError(f"graph is disconnected ({missing} unreachable nodes)")

    def link_between(self, a: int, b: int) -> LinkDescriptor:
        key = (a, b) if a < b else (b, a)
        try:
            return self.links[key]
        except KeyError:
            raise TopologyError(f"no link between {a} and {b}") from None

    def neighbors(self, node_id: int) -> tuple[int, ...]:
        return self.adjacency[node_id]

    def nodes_with_role(self, role: str) -> list[int]:
        return sorted(nid for nid, nd in self.nodes.items() if nd.role == role)

    def role_of(self, node_id: int) -> str:
        return self.nodes[node_id].role

    def access_router(self, node_id: int) -> int:
        """Nearest router-role node (ties broken by lowest id)."""
        if self.nodes[node_id].role == "router":
            return node_id
        best: tuple[int, int] | None = None
        dist = shortest_paths(self, node_id)
        for rid in self.nodes_with_role("router"):
            cand = (dist[rid][0], rid)
            if best is None or cand < best:
                best = cand
        if best is None:
            raise TopologyError("topology has no router nodes")
        return best[1]

    def with_extra_node(self, node: NodeDescriptor,
                        links: Sequence[LinkDescriptor]) -> "Topology":
        """New topology with one node and its links added (re-validated)."""
        return Topology.build(list(self.nodes.values()) + [node],
                              list(self.links.values()) + list(links))


def load_topology(text: str) -> Topology:
    """Parse topology file content and return a validated Topology."""
    nodes: list[NodeDescriptor] = []
    links: list[LinkDescriptor] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind = fields[0]
        try:
            if kind == "node":
                if len(fields) != 4:
                    raise TopologyError("expected: node <id> <label> <role>")
                nid = int(fields[1])
                role = fields[3]
                if role not in ROLES:
                    raise TopologyError(f"unknown role {role!r}")
                nodes.append(NodeDescriptor(nid, fields[2], role))
            elif kind == "link":
                if len(fields) != 5:
                    raise TopologyError("expected: link <idA> <idB> <delay_ms> <bandwidth_mbps>")
                links.append(LinkDescriptor(int(fields[1]), int(fields[2]),
                                            float(fields[3]), float(fields[4])))
            else:
                raise TopologyError(f"unknown record type {kind!r}")
        except TopologyError as exc:
            raise TopologyError(f"line {lineno}: {exc}") from None
        except ValueError as exc:
            raise TopologyError(f"line {lineno}: {exc}") from None
    return Topology.build(nodes, links)


def load_preset(name: str) -> Topology:
    """Load one of the bundled topology presets ('nsfnet' or 'oteglobe')."""
    if name not in PRESETS:
        raise TopologyError(f"unknown preset {name!r}; choose from {PRESETS}")
    text = resources.files("balancedn").joinpath(f"presets/{name}.topo").read_text("utf-8")
    return load_topology(text)


def shortest_paths(topology: Topology, source: int) -> dict[int, tuple[int, int]]:
    """Unweighted BFS distances from ``source``.

    Returns dest -> (distance, next_hop), where next_hop is the neighbor
    of ``source`` on a shortest path; among shortest paths the lowest
    next-hop id wins.  The source maps to (0, source).
    """
    if source not in topology.nodes:
        raise TopologyError(f"unknown source node {source}")
    dist: dict[int, int] = {source: 0}
    next_hop: dict[int, int] = {source: source}
    frontier = [source]
    depth = 0
    while frontier:
        depth += 1
        upcoming: list[int] = []
        for u in frontier:
            for v in topology.adjacency[u]:
                if v not in dist:
                    dist[v] = depth
                    upcoming.append(v)
        # lowest first-hop id over every shortest path to v
        for v in upcoming:
            if depth == 1:
                next_hop[v] = v
            else:
                next_hop[v] = min(next_hop[u] for u in topology.adjacency[v]
                                  if dist.get(u) == depth - 1)
        frontier = upcoming
    return {nid: (dist[nid], next_hop[nid]) for nid in dist}


class PathTable:
    """All-pairs shortest paths with lazy per-source BFS."""

    def __init__(self, topology: Topology) -> None:
        self.topology = topology
        self._by_source: dict[int, dict[int, tuple[int, int]]] = {}

    def from_source(self, source: int) -> dict[int, tuple[int, int]]:
        table = self._by_source.get(source)
        if table is None:
            table = shortest_paths(self.topology, source)
            self._by_source[source] = table
        return table

    def distance(self, a: int, b: int) -> int:
        return self.from_source(a)[b][0]

    def path(self, a: int, b: int) -> list[int]:
        """Node sequence a..b following next-hop pointers."""
        nodes = [a]
        cur = a
        while cur != b:
            cur = self.from_source(cur)[b][1]
            nodes.append(cur)
        return nodes

    def nearest(self, origin: int, candidates: Iterable[int]) -> int:
        """Closest candidate to origin, ties broken by lowest id."""
        table = self.from_source(origin)
        best = min((table[c][0], c) for c in candidates)
        return best[1]
