import random

import pytest

from balancedn.node import LOCAL_FACE, build_fib
from balancedn.topology import (LinkDescriptor, NodeDescriptor, PathTable,
                                Topology, TopologyError, load_preset,
                                load_topology, shortest_paths)


def make_line(n, role="router"):
    nodes = [NodeDescriptor(i, f"n{i}", role) for i in range(n)]
    links = [LinkDescriptor(i, i + 1, 1.0, 1000.0) for i in range(n - 1)]
    return Topology.build(nodes, links)


def random_connected(rng, n, extra_edges=2):
    """Random tree plus a few extra edges; connected by construction."""
    nodes = [NodeDescriptor(i, f"n{i}", "router") for i in range(n)]
    links = []
    present = set()
    for i in range(1, n):
        parent = rng.randrange(i)
        links.append(LinkDescriptor(parent, i, 1.0, 1000.0))
        present.add((parent, i))
    attempts = 0
    while extra_edges and attempts < 50:
        attempts += 1
        a, b = rng.randrange(n), rng.randrange(n)
        key = (min(a, b), max(a, b))
        if a != b and key not in present:
            present.add(key)
            links.append(LinkDescriptor(a, b, 1.0, 1000.0))
            extra_edges -= 1
    return Topology.build(nodes, links)


def brute_force_distance(topology, source, dest):
    """Minimum length over all simple paths, by exhaustive enumeration."""
    best = [None]

    def walk(node, length, seen):
        if best[0] is not None and length >= best[0]:
            return
        if node == dest:
            best[0] = length
            return
        for nbr in topology.adjacency[node]:
            if nbr not in seen:
                walk(nbr, length + 1, seen | {nbr})

    walk(source, 0, {source})
    return best[0]


class TestLoadTopology:
    def test_smallest_valid_graph(self):
        topo = load_topology("node 0 a router\nnode 1 b router\nlink 0 1 1 1000\n")
        assert len(topo.nodes) == 2 and len(topo.links) == 1
        assert topo.adjacency[0] == (1,) and topo.adjacency[1] == (0,)

    def test_comments_and_blank_lines_ignored(self):
        text = "# header\n\nnode 0 a router  # trailing\nnode 1 b router\nlink 0 1 1 1000\n"
        assert len(load_topology(text).nodes) == 2

    def test_line_order_irrelevant(self):
        fwd = "node 0 a router\nnode 1 b router\nlink 0 1 1 1000\n"
        rev = "link 0 1 1 1000\nnode 1 b router\nnode 0 a router\n"
        t1, t2 = load_topology(fwd), load_topology(rev)
        assert t1.nodes == t2.nodes and t1.links == t2.links

    def test_syntax_error_reports_line(self):
        with pytest.raises(TopologyError, match="line 2"):
            load_topology("node 0 a router\nnode nope\n")

    def test_unknown_role_rejected(self):
        with pytest.raises(TopologyError, match="role"):
            load_topology("node 0 a gateway\n")

    def test_duplicate_node_id(self):
        with pytest.raises(TopologyError, match="duplicate node"):
            load_topology("node 0 a router\nnode 0 b router\n")

    def test_dangling_link_endpoint(self):
        with pytest.raises(TopologyError, match="endpoint"):
            load_topology("node 0 a router\nnode 1 b router\nlink 0 5 1 1000\n")

    def test_disconnected_graph(self):
        text = ("node 0 a router\nnode 1 b router\nnode 2 c router\n"
                "node 3 d router\nlink 0 1 1 1000\nlink 2 3 1 1000\n")
        with pytest.raises(TopologyError, match="disconnected"):
            load_topology(text)

    def test_duplicate_link_rejected(self):
        text = ("node 0 a router\nnode 1 b router\n"
                "link 0 1 1 1000\nlink 1 0 1 1000\n")
        with pytest.raises(TopologyError, match="duplicate link"):
            load_topology(text)

    def test_self_loop_rejected(self):
        with pytest.raises(TopologyError, match="self-loop"):
            load_topology("node 0 a router\nlink 0 0 1 1000\n")

    def test_bad_link_parameters(self):
        with pytest.raises(TopologyError):
            load_topology("node 0 a router\nnode 1 b router\nlink 0 1 -1 1000\n")
        with pytest.raises(TopologyError):
            load_topology("node 0 a router\nnode 1 b router\nlink 0 1 1 0\n")


class TestPresets:
    def test_nsfnet_role_counts(self):
        topo = load_preset("nsfnet")
        assert len(topo.nodes) == 54
        assert len(topo.nodes_with_role("router")) == 11
        assert len(topo.nodes_with_role("consumer")) == 22
        assert len(topo.nodes_with_role("resolver")) == 11
        assert len(topo.nodes_with_role("producer")) == 8
        assert len(topo.nodes_with_role("tld")) == 1
        assert len(topo.nodes_with_role("nameserver")) == 1

    def test_oteglobe_role_counts(self):
        topo = load_preset("oteglobe")
        assert len(topo.nodes) == 427
        assert len(topo.nodes_with_role("router")) == 61
        assert len(topo.nodes_with_role("resolver")) == 61
        hosts = (len(topo.nodes_with_role("consumer"))
                 + len(topo.nodes_with_role("producer"))
                 + len(topo.nodes_with_role("tld"))
                 + len(topo.nodes_with_role("nameserver")))
        assert hosts == 305

    def test_nsfnet_has_graded_producer_distances(self):
        topo = load_preset("nsfnet")
        paths = PathTable(topo)
        consumer = topo.nodes_with_role("consumer")[0]
        dists = sorted(paths.distance(consumer, p)
                       for p in topo.nodes_with_role("producer"))
        assert dists[0] == 1 and 2 in dists and dists[-1] >= 4

    def test_unknown_preset(self):
        with pytest.raises(TopologyError):
            load_preset("arpanet")


class TestShortestPaths:
    def test_line_graph_distances(self):
        topo = make_line(3)
        table = shortest_paths(topo, 0)
        assert {n: d for n, (d, _) in table.items()} == {0: 0, 1: 1, 2: 2}

    def test_source_entry_is_identity(self):
        topo = make_line(3)
        assert shortest_paths(topo, 1)[1] == (0, 1)

    def test_unknown_source(self):
        with pytest.raises(TopologyError):
            shortest_paths(make_line(2), 9)

    def test_matches_brute_force_on_random_graphs(self):
        rng = random.Random(20)
        for _ in range(5):
            topo = random_connected(rng, 20, extra_edges=3)
            source = rng.randrange(20)
            table = shortest_paths(topo, source)
            for dest in range(20):
                assert table[dest][0] == brute_force_distance(topo, source, dest)

    def test_distance_symmetry(self):
        rng = random.Random(4)
        topo = random_connected(rng, 15, extra_edges=3)
        for u in range(15):
            fwd = shortest_paths(topo, u)
            for v in range(15):
                assert fwd[v][0] == shortest_paths(topo, v)[u][0]

    def test_next_hop_walk_terminates_in_distance_steps(self):
        rng = random.Random(11)
        topo = random_connected(rng, 18, extra_edges=4)
        paths = PathTable(topo)
        for u in range(18):
            for v in range(18):
                walk = paths.path(u, v)
                assert len(walk) - 1 == paths.distance(u, v)
                assert walk[0] == u and walk[-1] == v

    def test_next_hop_tie_break_lowest_neighbor(self):
        # square: two equal paths 0-1-3 and 0-2-3; next hop toward 3 must be 1
        nodes = [NodeDescriptor(i, f"n{i}", "router") for i in range(4)]
        links = [LinkDescriptor(0, 1, 1, 1000), LinkDescriptor(0, 2, 1, 1000),
                 LinkDescriptor(1, 3, 1, 1000), LinkDescriptor(2, 3, 1, 1000)]
        topo = Topology.build(nodes, links)
        assert shortest_paths(topo, 0)[3] == (2, 1)


class TestBuildFib:
    def test_anchor_at_node_itself_uses_local_face(self):
        topo = make_line(3)
        fib = build_fib(topo, 1, {"/a": 1})
        assert fib[0].faces == ((LOCAL_FACE, 0),)

    def test_anchor_one_hop_away_names_that_neighbor(self):
        topo = make_line(3)
        fib = build_fib(topo, 0, {"/a": 1})
        face, cost = fib[0].faces[0]
        assert cost == 1
        # node 0's only neighbor is node 1, on face 1
        assert face == 1

    def test_equidistant_anchors_lowest_id_wins(self):
        # diamond: 0-1, 0-2, 1-3, 2-3; anchors at 1 and 2 from node 3
        nodes = [NodeDescriptor(i, f"n{i}", "router") for i in range(4)]
        links = [LinkDescriptor(0, 1, 1, 1000), LinkDescriptor(0, 2, 1, 1000),
                 LinkDescriptor(1, 3, 1, 1000), LinkDescriptor(2, 3, 1, 1000)]
        topo = Topology.build(nodes, links)
        fib = build_fib(topo, 3, {"/a": [2, 1]})
        face, cost = fib[0].faces[0]
        assert cost == 1
        # faces at node 3: 1 -> neighbor 1, 2 -> neighbor 2; anchor 1 wins
        assert face == 1

    def test_unknown_anchor(self):
        with pytest.raises(KeyError):
            build_fib(make_line(2), 0, {"/a": 7})
