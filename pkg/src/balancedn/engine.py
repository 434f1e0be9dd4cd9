"""Deterministic discrete-event core: clock, queue, links, packet delivery.

Simulation time is an integer nanosecond count so that link transit
times (delay plus serialization) stay exact and event order never
depends on float rounding.  Events are totally ordered by
(fire_at, sequence); the sequence number is assigned at scheduling
time, so simultaneous events dequeue in scheduling order.

One engine instance is single-threaded; independent instances can run
in parallel with no shared state.  The per-instance random generator
is used only for Interest nonces, drawn once per injected request in
injection order, so identical seeds replay exactly.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from typing import IO, Optional

from .core import ContentName, DataPacket, InterestPacket
from .node import LOCAL_FACE, NdnNode, FLOODING
from .topology import LinkDescriptor, Topology

NS_PER_US = 1_000
NS_PER_MS = 1_000_000

# Interest packets are small and fixed-size; Data carries its payload.
INTEREST_BITS = 320
DEFAULT_PAYLOAD_BITS = 1024

DELIVER_INTEREST = "deliver_interest"
DELIVER_DATA = "deliver_data"
PIT_EXPIRY = "pit_expiry"
REQUEST_INJECTION = "request_injection"
REGISTRATION = "registration"

EVENT_KINDS = (DELIVER_INTEREST, DELIVER_DATA, PIT_EXPIRY, REQUEST_INJECTION, REGISTRATION)


class SchedulingError(ValueError):
    """Raised when an event is scheduled before the current clock."""


def link_transit_ns(link: LinkDescriptor, bits: int) -> int:
    """Nanoseconds to push ``bits`` across ``link``: delay + serialization."""
    delay = round(link.delay_ms * NS_PER_MS)
    serialization = round(bits * NS_PER_US / link.bandwidth_mbps)
    return delay + serialization


@dataclass(slots=True)
class Event:
    fire_at: int
    sequence: int
    kind: str
    node: int
    face: int = LOCAL_FACE
    packet: InterestPacket | DataPacket | None = None
    payload: object = None


class EventQueue:
    """Priority queue over (fire_at, sequence); tracks the current clock."""

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, Event]] = []
        self._next_seq = 0
        self.now = 0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, event: Event) -> None:
        if event.fire_at < self.now:
            raise SchedulingError(
                f"cannot schedule at t={event.fire_at} ns; clock is {self.now} ns")
        event.sequence = self._next_seq
        self._next_seq += 1
        heapq.heappush(self._heap, (event.fire_at, event.sequence, event))

    def peek_time(self) -> int | None:
        return self._heap[0][0] if self._heap else None

    def pop(self) -> Event:
        _, _, event = heapq.heappop(self._heap)
        self.now = event.fire_at
        return event


@dataclass(slots=True)
class FlowStats:
    """Link-crossing totals for one content name's flood."""

    interest_traversals: int = 0
    data_traversals: int = 0
    bits_moved: int = 0


@dataclass(slots=True)
class RequestState:
    """Bookkeeping for one injected request (one consumer, one name)."""

    name: ContentName
    consumer: int
    injected_at: int
    satisfied: bool = False
    failed: bool = False
    completed_at: int = 0
    path_hops: int = 0
    data_path: tuple[int, ...] = ()
    interest_path: tuple[int, ...] = ()  # trace of the Interest that got answered


class Simulation:
    """Event-driven run of NDN forwarding over one topology.

    Used for the flooding baseline: every node runs the flooding
    strategy, content lives on producer nodes, and injected requests
    are traced until the Data returns (or the consumer's PIT entry
    expires).
    """

    def __init__(self, topology: Topology, *, strategy: str = FLOODING,
                 cs_capacity: int = 0, seed: int = 42,
                 log: Optional[IO[str]] = None, track_edges: bool = False) -> None:
        self.topology = topology
        self.queue = EventQueue()
        self.rng = random.Random(seed)
        self.log = log
        self.nodes: dict[int, NdnNode] = {}
        for nid in sorted(topology.nodes):
            node = NdnNode(nid, topology.adjacency[nid], strategy=strategy,
                           cs_capacity=cs_capacity)
            node.pit_expiry_hook = self._make_expiry_hook(nid)
            self.nodes[nid] = node
        self.requests: dict[str, dict[int, RequestState]] = {}
        self.flows: dict[str, FlowStats] = {}
        self.injections = 0
        self.satisfied = 0
        self.failed = 0
        self.processed = 0
        self.track_edges = track_edges
        # (from, to, canonical name) -> interest transmissions, when tracking
        self.edge_interest_counts: dict[tuple[int, int, str], int] = {}

    # -- wiring ------------------------------------------------------------

    def _make_expiry_hook(self, node_id: int):
        def hook(key: str, token: int, expiry: int) -> None:
            self.queue.schedule(Event(expiry, 0, PIT_EXPIRY, node_id,
                                      payload=(key, token)))
        return hook

    @property
    def now(self) -> int:
        return self.queue.now

    @property
    def duplicates_suppressed(self) -> int:
        return sum(n.duplicates_suppressed for n in self.nodes.values())

    def publish(self, producer: int, name: ContentName,
                payload_bits: int = DEFAULT_PAYLOAD_BITS) -> None:
        self.nodes[producer].publish(name, payload_bits)

    # -- scheduling --------------------------------------------------------

    def inject_request(self, consumer: int, name: ContentName, at: int) -> RequestState:
        """Schedule a consumer request; returns its live bookkeeping record."""
        nonce = self.rng.getrandbits(64)
        interest = InterestPacket(name, nonce, hop_count=0, trace=(consumer,))
        key = name.canonical_text
        state = RequestState(name, consumer, at)
        self.requests.setdefault(key, {})[consumer] = state
        self.flows.setdefault(key, FlowStats())
        self.injections += 1
        self.queue.schedule(Event(at, 0, REQUEST_INJECTION, consumer,
                                  face=LOCAL_FACE, packet=interest))
        return state

    def schedule_registration(self, deployment, producer: int, name: ContentName,
                              at: int) -> None:
        """Run a deployment registration at a simulated instant."""
        self.queue.schedule(Event(at, 0, REGISTRATION, producer,
                                  payload=(deployment, name)))

    def transmit(self, link: LinkDescriptor, packet: InterestPacket | DataPacket,
                 from_node: int, now: int) -> Event:
        """Schedule delivery of ``packet`` across ``link``.

        The delivered copy is stamped with hop_count + 1 and the
        receiving node appended to its trace.
        """
        to_node = link.other(from_node)  # raises if from_node not on link
        bits = packet.payload_size if isinstance(packet, DataPacket) else INTEREST_BITS
        arrival = now + link_transit_ns(link, bits)
        delivered = packet.delivered_to(to_node)
        kind = DELIVER_DATA if isinstance(packet, DataPacket) else DELIVER_INTEREST
        face = self.nodes[to_node].face_of[from_node]
        event = Event(arrival, 0, kind, to_node, face=face, packet=delivered)
        self.queue.schedule(event)

        flow = self.flows.get(packet.name.canonical_text)
        if flow is not None:
            if kind == DELIVER_INTEREST:
                flow.interest_traversals += 1
            else:
                flow.data_traversals += 1
            flow.bits_moved += bits
        if self.track_edges and kind == DELIVER_INTEREST:
            edge = (from_node, to_node, packet.name.canonical_text)
            self.edge_interest_counts[edge] = self.edge_interest_counts.get(edge, 0) + 1
        return event

    # -- event loop ----------------------------------------------------------

    def run_until(self, deadline: int | None = None) -> int:
        """Process events in total order; returns how many were processed.

        Stops when the queue is empty or the next event would fire past
        ``deadline`` (which is then left in the queue).
        """
        processed = 0
        while len(self.queue):
            fire_at = self.queue.peek_time()
            if deadline is not None and fire_at > deadline:
                break
            event = self.queue.pop()
            self._dispatch(event)
            processed += 1
        self.processed += processed
        return processed

    def _dispatch(self, event: Event) -> None:
        now = event.fire_at
        if event.kind in (REQUEST_INJECTION, DELIVER_INTEREST):
            node = self.nodes[event.node]
            self._log(event)
            emissions = node.on_interest(event.packet, event.face, now)
            if any(isinstance(pkt, DataPacket) for _, pkt in emissions):
                states = self.requests.get(event.packet.name.canonical_text, {})
                for state in states.values():
                    if not state.interest_path:
                        state.interest_path = event.packet.trace
            self._emit(node, emissions, now)
        elif event.kind == DELIVER_DATA:
            node = self.nodes[event.node]
            self._log(event)
            emissions = node.on_data(event.packet, event.face, now)
            self._emit(node, emissions, now)
        elif event.kind == PIT_EXPIRY:
            key, token = event.payload
            entry = self.nodes[event.node].expire_pit(key, token, now)
            if entry is not None and LOCAL_FACE in entry.in_faces:
                state = self.requests.get(key, {}).get(event.node)
                if state is not None and not state.satisfied and not state.failed:
                    state.failed = True
                    state.completed_at = now
                    self.failed += 1
        elif event.kind == REGISTRATION:
            deployment, name = event.payload
            self._log(event)
            deployment.register_content(event.node, name, now)
        else:
            raise ValueError(f"unknown event kind {event.kind!r}")

    def _emit(self, node: NdnNode,
              emissions: list[tuple[int, InterestPacket | DataPacket]], now: int) -> None:
        for face, packet in emissions:
            if face == LOCAL_FACE:
                if isinstance(packet, DataPacket):
                    self._satisfy(node.id, packet, now)
                continue
            neighbor = node.faces[face]
            link = self.topology.link_between(node.id, neighbor)
            self.transmit(link, packet, node.id, now)

    def _satisfy(self, node_id: int, data: DataPacket, now: int) -> None:
        state = self.requests.get(data.name.canonical_text, {}).get(node_id)
        if state is None or state.satisfied or state.failed:
            return
        state.satisfied = True
        state.completed_at = now
        state.path_hops = data.hop_count
        state.data_path = data.trace
        self.satisfied += 1

    def _log(self, event: Event) -> None:
        if self.log is None:
            return
        packet = event.packet
        name = packet.name.canonical_text if packet is not None else "-"
        hops = packet.hop_count if packet is not None else 0
        self.log.write(f"{event.fire_at} {event.kind} {event.node} {name} {hops}\n")

    # -- reporting -------------------------------------------------------

    def flow_stats(self, name: ContentName) -> FlowStats:
        return self.flows[name.canonical_text]

    def conservation_holds(self) -> bool:
        """Every injection ended satisfied or failed; duplicates tracked apart."""
        terminal = self.satisfied + self.failed
        return (terminal + self.duplicates_suppressed
                == self.injections + self.duplicates_suppressed)
