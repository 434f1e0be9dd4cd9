"""Hash-sharded resolver hierarchy: registration, lookup, and fetch flow.

Every resolver-role node hosts one cluster site holding N shard tables
(shard index = crc16(name) mod N).  A producer registers each name at
its nearest site's shard and in the global nameserver zone; the TLD
server keeps the prefix delegations.  A consumer's request walks the
numbered stages:

    consumer -> nearest cluster site -> shard (by hash)
      shard record hit:  skip straight to the fetch (shortcut)
      shard record miss: ask the TLD, then the delegated nameserver
    shard -> producer (fetch), then Data returns producer -> site ->
    consumer, and the locator record is cached at the site on the way
    back so the next lookup for that name short-circuits.

Stage traversal counts are shortest-path hop distances; latency sums
the same per-link transit times the event engine charges, so the two
schemes' accounting is directly comparable.
"""

from __future__ import annotations

import gc
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .core import ContentName, assign_resolver, crc16, crc16_update
from .engine import DEFAULT_PAYLOAD_BITS, INTEREST_BITS, link_transit_ns
from .node import ContentStore
from .topology import PathTable, Topology

# the nameserver's record reply is a small control Data packet
LOCATOR_REPLY_BITS = 512

STAGE_CONSUMER_TO_CLUSTER = "consumer_to_cluster"
STAGE_CLUSTER_TO_RESOLVER = "cluster_to_resolver"
STAGE_RESOLVER_TO_TLD = "resolver_to_tld"
STAGE_TLD_TO_NAMESERVER = "tld_to_nameserver"
STAGE_FETCH = "fetch"
STAGE_DATA_RETURN = "data_return"

STAGE_ORDER = (
    STAGE_CONSUMER_TO_CLUSTER,
    STAGE_CLUSTER_TO_RESOLVER,
    STAGE_RESOLVER_TO_TLD,
    STAGE_TLD_TO_NAMESERVER,
    STAGE_FETCH,
    STAGE_DATA_RETURN,
)


class ConfigurationError(ValueError):
    """Deployment or registration prerequisites are not met."""


class RegistrationConflictError(ValueError):
    """A name is already registered to a different producer."""


@dataclass(frozen=True, slots=True)
class LocatorRecord:
    """Binding of a content name (canonical text) to its producer node."""

    name: str
    producer: int
    registered_at: int


@dataclass(slots=True)
class ResolverShard:
    """One shard table: authoritative records plus an LRU record cache."""

    index: int
    host_node: int
    authoritative: dict[str, LocatorRecord] = field(default_factory=dict)
    cache: ContentStore = field(default_factory=lambda: ContentStore(10_000))
    cached_records: dict[str, LocatorRecord] = field(default_factory=dict)

    def lookup(self, key: str) -> LocatorRecord | None:
        record = self.authoritative.get(key)
        if record is not None:
            return record
        if self.cache.get(key, 0) is None:
            return None
        return self.cached_records[key]

    def store_cached(self, record: LocatorRecord) -> None:
        if record.name in self.authoritative or self.cache.capacity == 0:
            return
        evicted = self.cache.insert(record.name, 1, 0)
        self.cached_records[record.name] = record
        if evicted is not None:
            del self.cached_records[evicted]


def shard_lookup(shard: ResolverShard, name: ContentName) -> LocatorRecord | None:
    """Exact-name match, authoritative before cached; hits refresh recency."""
    return shard.lookup(name.canonical_text)


@dataclass(slots=True)
class ClusterSite:
    """All N shards hosted at one resolver-role node."""

    node: int
    shards: list[ResolverShard]


@dataclass(slots=True)
class TldServer:
    host_node: int
    delegations: dict[str, int] = field(default_factory=dict)  # first segment -> ns node


@dataclass(slots=True)
class NameServer:
    host_node: int
    zone: dict[str, LocatorRecord] = field(default_factory=dict)
    delegated_prefixes: set[str] = field(default_factory=set)


@dataclass(frozen=True, slots=True)
class RegistrationReport:
    name: ContentName
    producer: int
    site_node: int
    shard_index: int
    nameserver_node: int
    link_traversals: int


@dataclass(slots=True)
class ResolutionOutcome:
    """Result of one resolve-and-fetch, stage by stage.

    ``steps`` lists (stage, link traversals) in flow order; the two TLD
    stages are present exactly when the shortcut was not taken.
    Interest traversals sum every forward stage; data traversals cover
    the nameserver's record reply plus the content's return path.
    """

    name: ContentName
    producer: int | None
    steps: list[tuple[str, int]]
    shortcut_taken: bool
    satisfied: bool
    interest_traversals: int
    data_traversals: int
    latency_ns: int
    bits_moved: int

    def stage_names(self) -> list[str]:
        return [stage for stage, _ in self.steps]


class Deployment:
    """Resolver sites plus the TLD/nameserver hierarchy over one topology."""

    def __init__(self, topology: Topology, resolver_count: int = 8, *,
                 cache_capacity: int = 10_000,
                 checksum: Callable[[bytes], int] = crc16) -> None:
        if resolver_count < 1:
            raise ConfigurationError("resolver_count must be at least 1")
        resolver_nodes = topology.nodes_with_role("resolver")
        if not resolver_nodes:
            raise ConfigurationError("topology has no resolver nodes")
        tld_nodes = topology.nodes_with_role("tld")
        if not tld_nodes:
            raise ConfigurationError("topology has no tld node")
        ns_nodes = topology.nodes_with_role("nameserver")
        if not ns_nodes:
            raise ConfigurationError("topology has no nameserver node")

        self.topology = topology
        self.resolver_count = resolver_count
        self.checksum = checksum
        self.paths = PathTable(topology)
        self.sites: dict[int, ClusterSite] = {
            nid: ClusterSite(nid, [
                ResolverShard(i, nid, cache=ContentStore(cache_capacity))
                for i in range(resolver_count)
            ])
            for nid in resolver_nodes
        }
        self.tld = TldServer(tld_nodes[0])
        self.nameservers: dict[int, NameServer] = {n: NameServer(n) for n in ns_nodes}
        self.default_nameserver = ns_nodes[0]
        self._nearest_site: dict[int, int] = {}

    # -- placement ---------------------------------------------------------

    def shard_index(self, name: ContentName) -> int:
        return assign_resolver(name, self.resolver_count, checksum=self.checksum)

    def nearest_site(self, node_id: int) -> ClusterSite:
        site_node = self._nearest_site.get(node_id)
        if site_node is None:
            site_node = self.paths.nearest(node_id, self.sites)
            self._nearest_site[node_id] = site_node
        return self.sites[site_node]

    def _nameserver_for(self, prefix: str) -> NameServer:
        ns_node = self.tld.delegations.get(prefix)
        if ns_node is None:
            ns_node = self.default_nameserver
        return self.nameservers[ns_node]

    # -- registration ------------------------------------------------------

    def register_content(self, producer: int, name: ContentName,
                         now: int = 0) -> RegistrationReport:
        """Install a name's locator record at the producer's site and zone.

        Re-registering the same (name, producer) pair is idempotent; a
        different producer for a known name is a conflict.
        """
        node = self.topology.nodes.get(producer)
        if node is None or node.role != "producer":
            raise ConfigurationError(f"node {producer} is not a producer")
        if not self.nameservers:
            raise ConfigurationError("no nameserver delegated for any prefix")
        key = name.canonical_text
        prefix = name.segments[0]
        ns = self._nameserver_for(prefix)
        existing = ns.zone.get(key)
        if existing is not None and existing.producer != producer:
            raise RegistrationConflictError(
                f"{key} is already registered to producer {existing.producer}")

        idx = self.shard_index(name)
        site = self.nearest_site(producer)
        if existing is None:
            record = LocatorRecord(key, producer, now)
            ns.zone[key] = record
            ns.delegated_prefixes.add(prefix)
            self.tld.delegations.setdefault(prefix, ns.host_node)
            site.shards[idx].authoritative[key] = record
        traversals = (self.paths.distance(producer, site.node)
                      + self.paths.distance(producer, ns.host_node))
        return RegistrationReport(name, producer, site.node, idx,
                                  ns.host_node, traversals)

    def register_bulk(self, pairs: Iterable[tuple[str, int]], now: int = 0) -> int:
        """Register many (canonical name, producer) pairs; returns traversals.

        Streamlined loop for scenario setup; placement is identical to
        register_content, including the conflict and idempotency rules.
        """
        checksum = self.checksum
        n = self.resolver_count
        tld_delegations = self.tld.delegations
        site_of: dict[int, ClusterSite] = {}
        dist_cache: dict[tuple[int, int], int] = {}
        total = 0
        for key, producer in pairs:
            prefix = key[1:key.index("/", 1)] if key.count("/") > 1 else key[1:]
            ns = self._nameserver_for(prefix)
            existing = ns.zone.get(key)
            if existing is not None:
                if existing.producer != producer:
                    raise RegistrationConflictError(
                        f"{key} is already registered to producer {existing.producer}")
                continue
            site = site_of.get(producer)
            if site is None:
                node = self.topology.nodes.get(producer)
                if node is None or node.role != "producer":
                    raise ConfigurationError(f"node {producer} is not a producer")
                site = self.nearest_site(producer)
                site_of[producer] = site
            hops = dist_cache.get((producer, ns.host_node))
            if hops is None:
                hops = (self.paths.distance(producer, site.node)
                        + self.paths.distance(producer, ns.host_node))
                dist_cache[(producer, ns.host_node)] = hops
            record = LocatorRecord(key, producer, now)
            ns.zone[key] = record
            ns.delegated_prefixes.add(prefix)
            tld_delegations.setdefault(prefix, ns.host_node)
            site.shards[checksum(key.encode()) % n].authoritative[key] = record
            total += hops
        return total

    # -- resolution ----------------------------------------------------------

    def resolve_and_fetch(self, consumer: int, name: ContentName, now: int = 0,
                          payload_bits: int = DEFAULT_PAYLOAD_BITS) -> ResolutionOutcome:
        """Run the full numbered flow for one request; see module docstring."""
        if consumer not in self.topology.nodes:
            raise ConfigurationError(f"unknown consumer node {consumer}")
        key = name.canonical_text
        site = self.nearest_site(consumer)
        ingress = site.node
        shard = site.shards[self.shard_index(name)]

        steps: list[tuple[str, int]] = []
        latency = 0
        interest_traversals = 0
        data_traversals = 0
        bits_moved = 0

        def interest_leg(stage: str, src: int, dst: int) -> None:
            nonlocal latency, interest_traversals, bits_moved
            hops, transit = self._leg(src, dst, INTEREST_BITS)
            steps.append((stage, hops))
            interest_traversals += hops
            latency += transit
            bits_moved += hops * INTEREST_BITS

        def data_leg(src: int, dst: int, bits: int) -> int:
            nonlocal latency, data_traversals, bits_moved
            hops, transit = self._leg(src, dst, bits)
            data_traversals += hops
            latency += transit
            bits_moved += hops * bits
            return hops

        interest_leg(STAGE_CONSUMER_TO_CLUSTER, consumer, ingress)
        interest_leg(STAGE_CLUSTER_TO_RESOLVER, ingress, shard.host_node)

        record = shard.lookup(key)
        shortcut = record is not None
        if not shortcut:
            tld_node = self.tld.host_node
            ns = self._nameserver_for(name.segments[0])
            interest_leg(STAGE_RESOLVER_TO_TLD, shard.host_node, tld_node)
            interest_leg(STAGE_TLD_TO_NAMESERVER, tld_node, ns.host_node)
            record = ns.zone.get(key)
            # the record reply retraces nameserver -> tld -> shard
            data_leg(ns.host_node, tld_node, LOCATOR_REPLY_BITS)
            data_leg(tld_node, shard.host_node, LOCATOR_REPLY_BITS)
            if record is None:
                return ResolutionOutcome(name, None, steps, False, False,
                                         interest_traversals, data_traversals,
                                         latency, bits_moved)
            shard.store_cached(record)

        producer = record.producer
        interest_leg(STAGE_FETCH, shard.host_node, producer)
        return_hops = data_leg(producer, shard.host_node, payload_bits)
        return_hops += data_leg(shard.host_node, ingress, payload_bits)
        return_hops += data_leg(ingress, consumer, payload_bits)
        steps.append((STAGE_DATA_RETURN, return_hops))
        # returning Data re-caches the record at the consumer-side site
        shard.store_cached(record)

        return ResolutionOutcome(name, producer, steps, shortcut, True,
                                 interest_traversals, data_traversals,
                                 latency, bits_moved)

    def _leg(self, src: int, dst: int, bits: int) -> tuple[int, int]:
        """Hop count and summed transit time of the shortest path src -> dst."""
        if src == dst:
            return 0, 0
        path = self.paths.path(src, dst)
        transit = 0
        for a, b in zip(path, path[1:]):
            transit += link_transit_ns(self.topology.link_between(a, b), bits)
        return len(path) - 1, transit


def lookup_timing_probe(shard: ResolverShard, probe_names: Sequence[ContentName],
                        repetitions: int) -> float:
    """Typical wall-clock lookup time in milliseconds over the probe set.

    Each repetition times len(probe_names) lookups against the shard's
    record table with a monotonic clock and yields a per-lookup mean;
    the median of the repetition means is returned.  One untimed warmup
    pass runs first and the garbage collector is paused while timing,
    so the result tracks table size rather than allocator pauses or
    scheduler stalls landing inside a single timing window.
    """
    if not probe_names:
        raise ValueError("probe_names must not be empty")
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    keys = [n.canonical_text for n in probe_names]
    lookup = shard.lookup
    for key in keys:
        lookup(key)
    per_rep_ms: list[float] = []
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repetitions):
            start = time.perf_counter()
            for key in keys:
                lookup(key)
            elapsed = time.perf_counter() - start
            per_rep_ms.append(elapsed * 1000.0 / len(keys))
    finally:
        if gc_was_enabled:
            gc.enable()
    return statistics.median(per_rep_ms)


def interleaved_timing_probe(probe_sets: Sequence[tuple[ResolverShard, Sequence[ContentName]]],
                             repetitions: int) -> dict[int, float]:
    """Per-shard typical lookup milliseconds, probed round-robin.

    Each repetition pass times every shard once before the next pass
    starts, so ambient load hits all shards alike and their ratio stays
    meaningful.  Per-shard results are medians of the repetition means,
    as in :func:`lookup_timing_probe`.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    prepared = []
    for shard, names in probe_sets:
        if not names:
            raise ValueError("probe_names must not be empty")
        keys = [n.canonical_text for n in names]
        for key in keys:
            shard.lookup(key)
        prepared.append((shard, keys))
    reps: dict[int, list[float]] = {shard.index: [] for shard, _ in prepared}
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repetitions):
            for shard, keys in prepared:
                lookup = shard.lookup
                start = time.perf_counter()
                for key in keys:
                    lookup(key)
                elapsed = time.perf_counter() - start
                reps[shard.index].append(elapsed * 1000.0 / len(keys))
    finally:
        if gc_was_enabled:
            gc.enable()
    return {index: statistics.median(values) for index, values in reps.items()}


_SUFFIX_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"
_suffix_tables: dict[int, list[list[str | None]]] = {}


def _suffix_table(resolver_count: int) -> list[list[str | None]]:
    """For every 16-bit CRC value, the first one-char suffix per residue class.

    Entry [crc][r] is a character c with crc16_update(crc, c) % N == r,
    or None when no single character lands there (rare; callers extend
    the base and retry).  Computed once per resolver count.
    """
    table = _suffix_tables.get(resolver_count)
    if table is not None:
        return table
    table = []
    codes = [(ch, ord(ch)) for ch in _SUFFIX_ALPHABET]
    for crc in range(1 << 16):
        row: list[str | None] = [None] * resolver_count
        remaining = resolver_count
        for ch, code in codes:
            residue = crc16_update(crc, code) % resolver_count
            if row[residue] is None:
                row[residue] = ch
                remaining -= 1
                if not remaining:
                    break
        table.append(row)
    _suffix_tables[resolver_count] = table
    return table


def synthesize_shard_names(index: int, count: int, resolver_count: int, *,
                           start: int = 0) -> list[str]:
    """Deterministic canonical names that all hash to ``index`` mod N.

    Each name is a sequential base with the shortest suffix that lands
    the checksum in the right residue class, so skewed shard tables can
    be built directly while keeping placement consistent with the hash.
    """
    suffixes = _suffix_table(resolver_count)
    names: list[str] = []
    i = start
    while len(names) < count:
        base = f"/cat{i % 16}/obj{i}"
        crc = crc16(base.encode())
        ch = suffixes[crc][index]
        depth = 0
        while ch is None:
            # pad with a depth-varying character so the walk cannot cycle
            # through checksum states that lack a one-char finisher
            pad = _SUFFIX_ALPHABET[depth % len(_SUFFIX_ALPHABET)]
            base += pad
            crc = crc16_update(crc, ord(pad))
            depth += 1
            ch = suffixes[crc][index]
        names.append(base + ch)
        i += 1
    return names


def build_skewed_shards(loads: dict[int, int], resolver_count: int, *,
                        host_node: int = 0) -> list[ResolverShard]:
    """Shard tables sized per the load map, for lookup-timing experiments."""
    shards = []
    offset = 0
    for index in range(resolver_count):
        count = loads.get(index, 0)
        shard = ResolverShard(index, host_node, cache=ContentStore(0))
        for key in synthesize_shard_names(index, count, resolver_count, start=offset):
            shard.authoritative[key] = LocatorRecord(key, host_node, 0)
        offset += count
        shards.append(shard)
    return shards
