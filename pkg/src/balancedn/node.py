"""Per-node forwarding state: PIT, FIB, content store, and strategies.

Face ids map to neighbors; face 0 is always the local application face.
Nodes are mutated only by the single-threaded event loop that owns them.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .core import ContentName, DataPacket, InterestPacket

LOCAL_FACE = 0

# PIT entries live 4 simulated seconds, then expire; late Data is dropped
# by the no-PIT rule.
PIT_LIFETIME_NS = 4_000_000_000

FLOODING = "flooding"
BEST_ROUTE = "best_route"


class UnknownFaceError(ValueError):
    """Raised when a packet arrives on a face the node does not have."""


@dataclass(slots=True)
class PitEntry:
    name: ContentName
    in_faces: set[int]
    seen_nonces: set[int]
    expiry: int
    token: int


@dataclass(frozen=True, slots=True)
class FibEntry:
    """Prefix route: faces kept ordered ascending by (cost, face id)."""

    prefix: ContentName
    faces: tuple[tuple[int, int], ...]  # (face id, cost)

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.faces, key=lambda fc: (fc[1], fc[0])))
        object.__setattr__(self, "faces", ordered)

    def best_face(self) -> int:
        return self.faces[0][0]


class ContentStore:
    """Fixed-capacity LRU cache of named payload sizes.

    Capacity 0 disables caching entirely (used for cold-cache runs).
    """

    def __init__(self, capacity: int) -> None:
        if capacity < 0:
            raise ValueError("capacity must be non-negative")
        self.capacity = capacity
        self._entries: OrderedDict[str, tuple[int, int]] = OrderedDict()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def get(self, key: str, now: int) -> int | None:
        """Payload size for ``key`` or None; a hit refreshes recency."""
        hit = self._entries.get(key)
        if hit is None:
            return None
        self._entries[key] = (hit[0], now)
        self._entries.move_to_end(key)
        return hit[0]

    def insert(self, key: str, size: int, now: int) -> str | None:
        """Insert or refresh ``key``; returns the evicted key if any."""
        if self.capacity == 0:
            return None
        if key in self._entries:
            self._entries[key] = (size, now)
            self._entries.move_to_end(key)
            return None
        evicted = None
        if len(self._entries) >= self.capacity:
            evicted, _ = self._entries.popitem(last=False)
        self._entries[key] = (size, now)
        return evicted

    def keys(self) -> list[str]:
        return list(self._entries)


def cs_insert(cs: ContentStore, name: ContentName, size: int, now: int) -> ContentName | None:
    """Insert into the content store; returns the evicted name if any."""
    evicted = cs.insert(name.canonical_text, size, now)
    if evicted is None:
        return None
    from .core import parse_name

    return parse_name(evicted)


def face_layout(neighbors: Iterable[int]) -> dict[int, int | None]:
    """Face map convention: 0 is local, neighbors get 1..k by ascending id."""
    faces: dict[int, int | None] = {LOCAL_FACE: None}
    for i, nbr in enumerate(sorted(neighbors), start=1):
        faces[i] = nbr
    return faces


class NdnNode:
    """One network node's forwarding engine."""

    def __init__(self, node_id: int, neighbors: Iterable[int], *,
                 strategy: str = FLOODING, cs_capacity: int = 1000) -> None:
        if strategy not in (FLOODING, BEST_ROUTE):
            raise ValueError(f"unknown strategy {strategy!r}")
        self.id = node_id
        self.strategy = strategy
        self.faces = face_layout(neighbors)
        self.face_of = {nbr: face for face, nbr in self.faces.items() if nbr is not None}
        self.pit: dict[str, PitEntry] = {}
        self.fib: list[FibEntry] = []
        self.cs = ContentStore(cs_capacity)
        self.published: dict[str, int] = {}  # canonical name -> payload bits
        self.duplicates_suppressed = 0
        self._next_token = 0
        # hook(name_key, token, expiry) lets the event loop schedule expiries
        self.pit_expiry_hook: Callable[[str, int, int], None] | None = None

    # -- content origin -------------------------------------------------

    def publish(self, name: ContentName, payload_bits: int) -> None:
        self.published[name.canonical_text] = payload_bits

    # -- strategies ------------------------------------------------------

    def strategy_flood(self, in_face: int) -> list[int]:
        """All non-local faces except the incoming one."""
        return [f for f in sorted(self.faces) if f != LOCAL_FACE and f != in_face]

    def strategy_best_route(self, name: ContentName) -> int | None:
        """Longest-prefix FIB match; lowest (cost, face id) wins; None on miss."""
        best: FibEntry | None = None
        for entry in self.fib:
            if name.has_prefix(entry.prefix):
                if best is None or len(entry.prefix.segments) > len(best.prefix.segments):
                    best = entry
        if best is None or not best.faces:
            return None
        return best.best_face()

    # -- packet handling ---------------------------------------------------

    def on_interest(self, interest: InterestPacket, in_face: int,
                    now: int) -> list[tuple[int, InterestPacket | DataPacket]]:
        if in_face not in self.faces:
            raise UnknownFaceError(f"node {self.id} has no face {in_face}")
        key = interest.name.canonical_text

        size = self.published.get(key)
        if size is None:
            size = self.cs.get(key, now)
        if size is not None:
            data = DataPacket(interest.name, size, trace=(self.id,))
            return [(in_face, data)]

        entry = self.pit.get(key)
        if entry is not None:
            if interest.nonce in entry.seen_nonces:
                self.duplicates_suppressed += 1
                return []
            entry.in_faces.add(in_face)
            entry.seen_nonces.add(interest.nonce)
            return []

        self._next_token += 1
        entry = PitEntry(interest.name, {in_face}, {interest.nonce},
                         now + PIT_LIFETIME_NS, self._next_token)
        self.pit[key] = entry
        if self.pit_expiry_hook is not None:
            self.pit_expiry_hook(key, entry.token, entry.expiry)

        if self.strategy == FLOODING:
            out_faces = self.strategy_flood(in_face)
        else:
            face = self.strategy_best_route(interest.name)
            out_faces = [face] if face is not None and face != in_face else []
        return [(face, interest) for face in out_faces]

    def on_data(self, data: DataPacket, in_face: int,
                now: int) -> list[tuple[int, DataPacket]]:
        if in_face not in self.faces:
            raise UnknownFaceError(f"node {self.id} has no face {in_face}")
        key = data.name.canonical_text
        entry = self.pit.pop(key, None)
        if entry is None:
            return []  # unsolicited data is dropped
        self.cs.insert(key, data.payload_size, now)
        return [(face, data) for face in sorted(entry.in_faces) if face != in_face]

    def expire_pit(self, key: str, token: int, now: int) -> PitEntry | None:
        """Drop the PIT entry if it is still the one the timer was set for."""
        entry = self.pit.get(key)
        if entry is not None and entry.token == token and entry.expiry <= now:
            del self.pit[key]
            return entry
        return None


def build_fib(topology, node_id: int,
              anchors: Mapping[ContentName | str, int | Sequence[int]]) -> list[FibEntry]:
    """FIB entries routing each prefix toward its nearest anchor node.

    An anchor at the node itself yields the local face.  When several
    anchors serve one prefix, the nearest wins, ties by lowest node id.
    """
    from .core import parse_name
    from .topology import shortest_paths

    table = shortest_paths(topology, node_id)
    neighbors = topology.adjacency[node_id]
    faces = face_layout(neighbors)
    face_of = {nbr: face for face, nbr in faces.items() if nbr is not None}

    entries: list[FibEntry] = []
    for prefix, anchor_ids in anchors.items():
        if isinstance(prefix, str):
            prefix = parse_name(prefix)
        ids = [anchor_ids] if isinstance(anchor_ids, int) else list(anchor_ids)
        for aid in ids:
            if aid not in topology.nodes:
                raise KeyError(f"unknown anchor node {aid}")
        dist, winner = min((table[aid][0], aid) for aid in ids)
        if winner == node_id:
            entries.append(FibEntry(prefix, ((LOCAL_FACE, 0),)))
        else:
            next_hop = table[winner][1]
            entries.append(FibEntry(prefix, ((face_of[next_hop], dist),)))
    return entries
