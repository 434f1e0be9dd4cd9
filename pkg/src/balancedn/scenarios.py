"""Scenario presets: single requests, all-pairs sweeps, and skew probes.

Scenario ids:

    s1_near / s1_mid / s1_long
        One consumer fetches one 1024-bit content item at hop distance
        1 / 2 / the farthest available (>= 4), both schemes, cold caches.
    s2  All cross-subnet consumer/producer pairs on the NSFnet preset
        (plus one extra consumer), unique names, after distributing the
        whole content corpus over the shards by hash.
    s3  The same sweep on the OTEGlobe preset, which offers a much
        wider spread of hop distances.
    s4  Builds shard tables per an explicit per-shard load map and
        times real dictionary lookups (10 repetitions, averaged).

The synthetic corpus names look like ``/cat<k>/obj<i>-<tag>`` with k
cycling over 16 prefixes, i sequential, and a short seeded-random tag.
The tag is what spreads the checksum uniformly: purely sequential
names leave too much structure in the low bits to divide 1e6 items
within the balance tolerances.
"""

from __future__ import annotations

import random
import sys
from dataclasses import dataclass
from typing import IO

from .core import parse_name
from .engine import DEFAULT_PAYLOAD_BITS, Simulation
from .metrics import ProbeStat, RequestRecord, ScenarioReport, emit_csv
from .resolution import (Deployment, build_skewed_shards,
                         interleaved_timing_probe)
from .topology import (LinkDescriptor, NodeDescriptor, PathTable, Topology,
                       load_preset, load_topology)

SCENARIOS = ("s1_near", "s1_mid", "s1_long", "s2", "s3", "s4")
SCHEMES = ("flooding", "balancedn")

DEFAULT_CONTENT_COUNT = 1_000_000
PROBES_PER_SHARD = 2000
PROBE_REPETITIONS = 10


class ScenarioError(ValueError):
    """Invalid scenario configuration."""


@dataclass(slots=True)
class ScenarioConfig:
    scenario: str
    topology: str = ""  # preset name or file path; empty picks the default
    resolver_count: int = 8
    content_count: int | None = None
    skew: dict[int, int] | None = None
    seed: int = 42
    schemes: tuple[str, ...] = SCHEMES
    out: str | None = None
    verbose: bool = False

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ScenarioError(f"unknown scenario {self.scenario!r}")
        if not self.schemes or any(s not in SCHEMES for s in self.schemes):
            raise ScenarioError(f"schemes must be a non-empty subset of {SCHEMES}")
        if self.resolver_count < 1:
            raise ScenarioError("resolver_count must be at least 1")
        if not self.topology:
            self.topology = default_topology(self.scenario)
        if self.scenario == "s4":
            if not self.skew:
                raise ScenarioError("scenario s4 needs a --skew load map")
            bad = [i for i in self.skew if not 0 <= i < self.resolver_count]
            if bad:
                raise ScenarioError(f"skew indices out of range: {bad}")
            if any(c < 0 for c in self.skew.values()):
                raise ScenarioError("skew counts must be non-negative")
            total = sum(self.skew.values())
            if self.content_count is not None and self.content_count != total:
                raise ScenarioError(
                    f"skew counts sum to {total}, not content_count {self.content_count}")
            self.content_count = total
        else:
            if self.skew:
                raise ScenarioError("--skew only applies to scenario s4")
            if self.content_count is None:
                self.content_count = DEFAULT_CONTENT_COUNT
            if self.content_count < 1:
                raise ScenarioError("content_count must be positive")


def default_topology(scenario: str) -> str:
    return "oteglobe" if scenario == "s3" else "nsfnet"


def resolve_topology(config: ScenarioConfig) -> Topology:
    """Load the configured topology, enforcing scenario/preset pairing."""
    name = config.topology
    if name in ("nsfnet", "oteglobe"):
        expected = default_topology(config.scenario)
        if config.scenario != "s4" and name != expected:
            raise ScenarioError(
                f"scenario {config.scenario} pairs with the {expected!r} preset, "
                f"not {name!r}")
        return load_preset(name)
    with open(name, "r", encoding="utf-8") as fh:
        return load_topology(fh.read())


def synthetic_corpus(count: int, seed: int) -> list[str]:
    """Deterministic canonical names, hash-diverse via a seeded tag."""
    rng = random.Random(seed)
    bits = rng.getrandbits
    return [f"/cat{i % 16}/obj{i}-{bits(16):04x}" for i in range(count)]


def _check_resolver_bound(config: ScenarioConfig, topology: Topology) -> None:
    resolver_nodes = topology.nodes_with_role("resolver")
    if config.resolver_count > len(resolver_nodes):
        raise ScenarioError(
            f"resolver_count {config.resolver_count} exceeds the "
            f"{len(resolver_nodes)} resolver nodes in the topology")


def run_scenario(config: ScenarioConfig) -> ScenarioReport:
    """Execute one scenario and return its report (and write CSV if asked)."""
    if config.scenario == "s4":
        report = _run_skew_probe(config)
    else:
        topology = resolve_topology(config)
        _check_resolver_bound(config, topology)
        if config.scenario == "s2":
            topology = _with_extra_consumer(topology)
        if config.scenario.startswith("s1"):
            report = _run_single_request(topology, config)
        else:
            report = _run_pair_sweep(topology, config)
    if config.out:
        with open(config.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(emit_csv(report))
    return report


def _with_extra_consumer(topology: Topology) -> Topology:
    """The populated variant: one extra consumer on the highest-id router."""
    new_id = max(topology.nodes) + 1
    router = topology.nodes_with_role("router")[-1]
    node = NodeDescriptor(new_id, "c-extra", "consumer")
    link = LinkDescriptor(new_id, router, 1.0, 1000.0)
    return topology.with_extra_node(node, [link])


def _log_stream(config: ScenarioConfig) -> IO[str] | None:
    return sys.stderr if config.verbose else None


def _flooding_record(sim: Simulation, scenario: str, producer: int,
                     distance: int, state) -> RequestRecord:
    flow = sim.flow_stats(state.name)
    return RequestRecord(
        scenario=scenario, consumer=state.consumer, producer=producer,
        distance=distance, scheme="flooding",
        interest_traversals=flow.interest_traversals,
        data_traversals=flow.data_traversals,
        path_hops=state.path_hops,
        latency_ns=state.completed_at - state.injected_at,
        satisfied=state.satisfied,
        bytes_moved=flow.bits_moved // 8,
    )


def _balancedn_record(outcome, scenario: str, consumer: int, producer: int,
                      distance: int) -> RequestRecord:
    path_hops = dict(outcome.steps).get("data_return", 0)
    return RequestRecord(
        scenario=scenario, consumer=consumer,
        producer=outcome.producer if outcome.producer is not None else -1,
        distance=distance, scheme="balancedn",
        interest_traversals=outcome.interest_traversals,
        data_traversals=outcome.data_traversals,
        path_hops=path_hops,
        latency_ns=outcome.latency_ns,
        satisfied=outcome.satisfied,
        bytes_moved=outcome.bits_moved // 8,
    )


def _run_single_request(topology: Topology, config: ScenarioConfig) -> ScenarioReport:
    paths = PathTable(topology)
    consumers = topology.nodes_with_role("consumer")
    producers = topology.nodes_with_role("producer")
    if not consumers or not producers:
        raise ScenarioError("topology needs consumer and producer nodes")
    consumer = consumers[0]
    by_distance = sorted((paths.distance(consumer, p), p) for p in producers)
    if config.scenario == "s1_near":
        wanted = [p for d, p in by_distance if d == 1]
        if not wanted:
            raise ScenarioError("no producer at distance 1 from the first consumer")
        producer = wanted[0]
    elif config.scenario == "s1_mid":
        wanted = [p for d, p in by_distance if d == 2]
        if not wanted:
            raise ScenarioError("no producer at distance 2 from the first consumer")
        producer = wanted[0]
    else:
        distance, producer = by_distance[-1]
        if distance < 4:
            raise ScenarioError("no producer at distance >= 4 from the first consumer")
    distance = paths.distance(consumer, producer)
    name = parse_name(synthetic_corpus(1, config.seed)[0])

    report = ScenarioReport(config.scenario)
    if "flooding" in config.schemes:
        sim = Simulation(topology, cs_capacity=0, seed=config.seed,
                         log=_log_stream(config))
        sim.publish(producer, name, DEFAULT_PAYLOAD_BITS)
        state = sim.inject_request(consumer, name, at=0)
        sim.run_until(None)
        report.add(_flooding_record(sim, config.scenario, producer,
                                    distance, state))
    if "balancedn" in config.schemes:
        deployment = Deployment(topology, config.resolver_count)
        deployment.register_content(producer, name)
        outcome = deployment.resolve_and_fetch(consumer, name)
        report.add(_balancedn_record(outcome, config.scenario, consumer,
                                     producer, distance))
        report.shard_loads = _shard_loads(deployment)
    return report


def _cross_subnet_pairs(topology: Topology,
                        paths: PathTable) -> list[tuple[int, int, int]]:
    """(consumer, producer, corpus slot) for every cross-subnet pair.

    Slot k + j * len(producers) is the j-th name owned by producer k,
    because corpus ownership cycles round-robin over the producers.
    """
    consumers = topology.nodes_with_role("consumer")
    producers = topology.nodes_with_role("producer")
    routers = topology.nodes_with_role("router")
    router_of = {nid: paths.nearest(nid, routers) for nid in consumers + producers}
    pairs = []
    for j, consumer in enumerate(consumers):
        for k, producer in enumerate(producers):
            if router_of[consumer] == router_of[producer]:
                continue
            pairs.append((consumer, producer, k + j * len(producers)))
    return pairs


def _run_pair_sweep(topology: Topology, config: ScenarioConfig) -> ScenarioReport:
    """Scenario 2/3 protocol: every consumer fetches foreign unique content."""
    paths = PathTable(topology)
    producers = topology.nodes_with_role("producer")
    corpus = synthetic_corpus(config.content_count, config.seed)

    pairs = _cross_subnet_pairs(topology, paths)
    if not pairs:
        raise ScenarioError("no cross-subnet consumer/producer pairs")
    if max(slot for _, _, slot in pairs) >= len(corpus):
        raise ScenarioError(
            f"content_count {config.content_count} is too small for "
            f"{len(pairs)} unique cross-subnet requests")
    requests = [(c, p, corpus[slot]) for c, p, slot in pairs]

    report = ScenarioReport(config.scenario)
    if "flooding" in config.schemes:
        sim = Simulation(topology, cs_capacity=0, seed=config.seed,
                         log=_log_stream(config))
        for _, producer, key in requests:
            sim.publish(producer, parse_name(key), DEFAULT_PAYLOAD_BITS)
        for consumer, producer, key in requests:
            state = sim.inject_request(consumer, parse_name(key), at=sim.now)
            sim.run_until(None)
            report.add(_flooding_record(sim, config.scenario, producer,
                                        paths.distance(consumer, producer), state))
    if "balancedn" in config.schemes:
        deployment = Deployment(topology, config.resolver_count)
        n_producers = len(producers)
        deployment.register_bulk(
            (key, producers[i % n_producers]) for i, key in enumerate(corpus))
        for consumer, producer, key in requests:
            outcome = deployment.resolve_and_fetch(consumer, parse_name(key))
            report.add(_balancedn_record(outcome, config.scenario, consumer,
                                         producer, paths.distance(consumer, producer)))
        report.shard_loads = _shard_loads(deployment)
    return report


def _shard_loads(deployment: Deployment) -> dict[int, int]:
    loads = {i: 0 for i in range(deployment.resolver_count)}
    for site in deployment.sites.values():
        for shard in site.shards:
            loads[shard.index] += len(shard.authoritative)
    return loads


def _run_skew_probe(config: ScenarioConfig) -> ScenarioReport:
    """Scenario 4: real lookup timing against skewed shard tables.

    Shards are probed round-robin inside each repetition pass so that
    host noise lands on every shard alike; see interleaved_timing_probe.
    """
    topology = resolve_topology(config)
    _check_resolver_bound(config, topology)
    shards = build_skewed_shards(config.skew or {}, config.resolver_count)
    rng = random.Random(config.seed)
    probe_sets = []
    for shard in shards:
        keys = list(shard.authoritative)
        if not keys:
            continue
        sample = rng.sample(keys, min(PROBES_PER_SHARD, len(keys)))
        probe_sets.append((shard, [parse_name(k) for k in sample]))
    timings = interleaved_timing_probe(probe_sets, PROBE_REPETITIONS)
    report = ScenarioReport(config.scenario)
    for shard, names in probe_sets:
        report.probes.append(ProbeStat(shard.index, len(shard.authoritative),
                                       PROBE_REPETITIONS * len(names),
                                       timings[shard.index]))
        report.shard_loads[shard.index] = len(shard.authoritative)
    return report
