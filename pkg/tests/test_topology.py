import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import bellman_ford
from vransplit.errors import ParseError, Unreachable
from vransplit.model import Link, Node, Topology
from vransplit.topology import (WaxmanConfig, build_topology, generate_waxman, great_circle_km, ingest_real,
                                shortest_paths, waxman_edges)


class TestWaxman:
    def test_complete_graph_when_colocated(self):
        topo = generate_waxman(WaxmanConfig(n_du=6, n_router=2, alpha=1.0, beta=1.0, area=0.0, seed=3))
        n = len(topo.nodes)
        assert len(topo.links) == n * (n - 1) // 2

    def test_deterministic(self):
        cfg = WaxmanConfig(n_du=12, n_router=4, seed=99)
        a, b = generate_waxman(cfg), generate_waxman(cfg)
        assert a == b and a.paths == b.paths

    def test_edge_count_within_three_sigma(self):
        rng = np.random.Generator(np.random.PCG64(7))
        coords = rng.random((100, 2)) * 300.0
        # oracle: explicit double loop over pairs
        d_max = max(math.dist(coords[i], coords[j]) for i in range(100) for j in range(i + 1, 100))
        probs = [0.5 * math.exp(-math.dist(coords[i], coords[j]) / (0.1 * d_max))
                 for i in range(100) for j in range(i + 1, 100)]
        mean = sum(probs)
        sigma = math.sqrt(sum(p * (1 - p) for p in probs))
        for seed in range(5):
            count = len(waxman_edges(coords, 0.5, 0.1, np.random.Generator(np.random.PCG64(seed))))
            assert abs(count - mean) <= 3 * sigma

    def test_ranges_respected(self):
        cfg = WaxmanConfig(n_du=8, n_router=3, capacity_range=(10.0, 20.0), link_cost_range=(0.5, 0.6), seed=1)
        topo = generate_waxman(cfg)
        assert all(10 <= l.capacity_mbps <= 20 and 0.5 <= l.cost_per_mbps <= 0.6 for l in topo.links)

    def test_cu_nearest_centre(self):
        topo = generate_waxman(WaxmanConfig(n_du=9, n_router=0, area=100.0, seed=5))
        d = [math.hypot(n.x_km - 50, n.y_km - 50) for n in topo.nodes]
        assert topo.nodes[0].kind == "CU" and d[0] == min(d)

    @pytest.mark.parametrize("bad", [dict(alpha=0.0), dict(beta=1.5), dict(n_du=0),
                                     dict(capacity_range=(5.0, 1.0))])
    def test_invalid_config(self, bad):
        with pytest.raises(ValueError):
            WaxmanConfig(**bad)

    @given(st.integers(1, 15), st.integers(0, 6), st.integers(0, 2**32 - 1))
    def test_always_valid(self, n_du, n_router, seed):
        topo = generate_waxman(WaxmanConfig(n_du=n_du, n_router=n_router, seed=seed))
        assert topo.n_du == n_du and set(topo.paths) == set(topo.du_ids)
        assert all(l.capacity_mbps > 0 for l in topo.links)


class TestShortestPaths:
    def test_line(self):
        nodes = [Node(0, "CU"), Node(1, "DU"), Node(2, "Router")]
        topo = build_topology(nodes, [Link(1, 2, 1e3, 0.1, 1.0), Link(2, 0, 1e3, 0.2, 1.0)])
        assert topo.paths[1].nodes == (1, 2, 0)
        assert topo.paths[1].routing_cost == pytest.approx(0.3)

    def test_fewer_hops_win_ties(self):
        nodes = [Node(0, "CU"), Node(1, "DU"), Node(2, "Router"), Node(3, "Router")]
        links = [Link(1, 0, 1e3, 0.5, 1.0), Link(1, 2, 1e3, 0.25, 1.0), Link(2, 0, 1e3, 0.25, 1.0)]
        assert build_topology(nodes, links).paths[1].nodes == (1, 0)

    def test_lexicographic_ties(self):
        nodes = [Node(0, "CU"), Node(1, "DU"), Node(2, "Router"), Node(3, "Router")]
        links = [Link(1, 3, 1e3, 0.5, 1.0), Link(3, 0, 1e3, 0.5, 1.0),
                 Link(1, 2, 1e3, 0.5, 1.0), Link(2, 0, 1e3, 0.5, 1.0)]
        assert build_topology(nodes, links).paths[1].nodes == (1, 2, 0)

    def test_unreachable(self):
        nodes = [Node(0, "CU"), Node(1, "DU"), Node(2, "DU")]
        with pytest.raises(Unreachable):
            shortest_paths(Topology(nodes, [Link(0, 1, 1e3, 0.1, 1.0)]))

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_bellman_ford(self, seed):
        topo = generate_waxman(WaxmanConfig(n_du=30, n_router=19, alpha=0.6, beta=0.2, seed=seed))
        idx = {n.id: i for i, n in enumerate(topo.nodes)}
        edges = [(idx[l.a], idx[l.b], l.cost_per_mbps) for l in topo.links]
        dist = bellman_ford(len(topo.nodes), edges, 0)
        for du, path in topo.paths.items():
            assert path.routing_cost == pytest.approx(dist[idx[du]], rel=1e-12, abs=1e-15)


PLANAR = """\
COORDS planar
NODES
a 0 0
b 100 0
c 50 0
LINKS
a c 1000
c b 2000 0.25
"""


class TestIngest:
    def test_cost_from_distance(self):
        topo = ingest_real("NODES\nx 0 0\ny 100 0\nLINKS\nx y 500\nCU x\n")
        assert topo.links[0].cost_per_mbps == pytest.approx(1.0)

    def test_colocated_zero_propagation(self):
        topo = ingest_real("CU x\nNODES\nx 5 5\ny 5 5\nLINKS\nx y 1000\n")
        path = topo.paths[topo.du_ids[0]]
        assert path.delay_ms == pytest.approx((12000 / 1000 + 5) / 1000)

    def test_explicit_cost_wins(self):
        topo = ingest_real(PLANAR)
        costs = {(l.a, l.b): l.cost_per_mbps for l in topo.links}
        assert 0.25 in costs.values()
        assert topo.nodes[0].id == 0 and topo.n_du == 2

    def test_geo_distance(self):
        # one degree of latitude
        assert great_circle_km(0, 0, 1, 0) == pytest.approx(111.19, abs=0.01)
        topo = ingest_real("COORDS geo\nCU p\nNODES\np 0 0\nq 0 1\nLINKS\np q 10000\n")
        assert topo.links[0].length_km == pytest.approx(111.19, abs=0.01)

    @pytest.mark.parametrize("text, line", [
        ("NODES\na 0\n", 2),
        ("NODES\na 0 0\na 1 1\n", 2),
        ("NODES\na 0 0\nb 1 x\n", 3),
        ("NODES\na 0 0\nb 1 1\nLINKS\na z 10\n", 5),
        ("hello\n", 1),
    ])
    def test_parse_errors_carry_line(self, text, line):
        with pytest.raises(ParseError) as err:
            ingest_real(text)
        assert err.value.line == line

    def test_disconnected(self):
        with pytest.raises(ParseError):
            ingest_real("CU a\nNODES\na 0 0\nb 1 1\nc 2 2\nLINKS\na b 10\n")
