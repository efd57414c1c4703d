"""Synthetic (Waxman) and coordinate-based RAN topologies, plus DU-to-CU routing.

Random draws use ``numpy.random.Generator(PCG64(seed))`` in a fixed order:
node coordinates (x then y for every node), one uniform per node pair
``(i, j), i < j`` in row-major order, then capacity and routing cost for each
link in link order. The same seed therefore gives the same topology everywhere
PCG64 is available.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from .errors import GenerationFailed, InvalidTopology, ParseError, Unreachable
from .model import Link, Node, Path, Topology

EARTH_RADIUS_KM = 6371.0
REAL_COST_PER_MBPS_KM = 0.01


@dataclass(frozen=True)
class WaxmanConfig:
    n_du: int = 10
    n_router: int = 5
    alpha: float = 0.5
    beta: float = 0.1
    area: float = 300.0  # square side, km
    capacity_range: tuple = (1000.0, 100000.0)  # Mbps
    link_cost_range: tuple = (0.001, 0.01)  # per Mbps
    seed: int = 0

    def __post_init__(self):
        if self.n_du < 1 or self.n_router < 0:
            raise ValueError("need at least one DU and a non-negative router count")
        if not (0 < self.alpha <= 1 and 0 < self.beta <= 1):
            raise ValueError("alpha and beta must lie in (0, 1]")
        if self.area < 0:
            raise ValueError("area must be >= 0")
        for lo, hi in (self.capacity_range, self.link_cost_range):
            if lo > hi:
                raise ValueError("range minimum exceeds maximum")
        if self.capacity_range[0] <= 0 or self.link_cost_range[0] < 0:
            raise ValueError("capacities must be positive and costs non-negative")


def waxman_probabilities(coords: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Pairwise link probabilities ``alpha * exp(-d / (beta * d_max))``."""
    coords = np.asarray(coords, dtype=float)
    d = np.sqrt(((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=-1))
    d_max = d.max() if d.size else 0.0
    if d_max == 0.0:
        return np.full(d.shape, float(alpha))
    return alpha * np.exp(-d / (beta * d_max))


def waxman_edges(coords: np.ndarray, alpha: float, beta: float, rng: np.random.Generator) -> list:
    """Raw Waxman draw: one uniform per pair ``i < j`` in row-major order."""
    prob = waxman_probabilities(coords, alpha, beta)
    n = prob.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    u = rng.random(iu.shape[0])
    keep = u < prob[iu, ju]
    return list(zip(iu[keep].tolist(), ju[keep].tolist()))


def _components(n: int, edges) -> list:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict = {}
    for v in range(n):
        groups.setdefault(find(v), []).append(v)
    return list(groups.values())


def connect_components(coords: np.ndarray, edges: list, max_rounds: int | None = None) -> list:
    """Repeatedly add the shortest inter-component edge until the graph is connected."""
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[0]
    edges = list(edges)
    rounds = max_rounds if max_rounds is not None else n
    for _ in range(rounds):
        comps = _components(n, edges)
        if len(comps) <= 1:
            return edges
        label = np.empty(n, dtype=np.int64)
        for c, members in enumerate(comps):
            label[members] = c
        d = np.sqrt(((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=-1))
        d[label[:, None] == label[None, :]] = np.inf
        # argmin over the flattened upper triangle keeps the lowest (i, j) on ties
        d[np.tril_indices(n)] = np.inf
        i, j = np.unravel_index(int(np.argmin(d)), d.shape)
        if not np.isfinite(d[i, j]):
            break
        edges.append((int(i), int(j)))
    if len(_components(n, edges)) > 1:
        raise GenerationFailed("could not connect the Waxman graph")
    return edges


def generate_waxman(config: WaxmanConfig) -> Topology:
    """Random Waxman RAN: one CU (the node nearest the area centre), DUs, then routers."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    total = 1 + config.n_du + config.n_router
    coords = rng.random((total, 2)) * config.area
    centre = np.array([config.area / 2, config.area / 2])
    cu = int(np.argmin(((coords - centre) ** 2).sum(axis=1)))
    order = [cu] + [i for i in range(total) if i != cu]
    coords = coords[order]

    edges = waxman_edges(coords, config.alpha, config.beta, rng)
    edges = connect_components(coords, edges)

    nodes = [Node(0, "CU", float(coords[0, 0]), float(coords[0, 1]))]
    for i in range(1, total):
        kind = "DU" if i <= config.n_du else "Router"
        nodes.append(Node(i, kind, float(coords[i, 0]), float(coords[i, 1])))
    lo_c, hi_c = config.capacity_range
    lo_z, hi_z = config.link_cost_range
    caps = rng.uniform(lo_c, hi_c, len(edges))
    costs = rng.uniform(lo_z, hi_z, len(edges))
    links = [Link(a, b, float(c), float(z)) for (a, b), c, z in zip(edges, caps, costs)]
    topo = Topology(nodes, links)
    return topo.with_paths(shortest_paths(topo))


# --------------------------------------------------------------------------- routing


def _adjacency(topology: Topology) -> dict:
    adj: dict = {n.id: [] for n in topology.nodes}
    for k, link in enumerate(topology.links):
        adj[link.a].append((link.b, k))
        adj[link.b].append((link.a, k))
    return adj


def shortest_paths(topology: Topology) -> dict:
    """Least routing-cost path from every DU to the CU.

    Labels are compared as ``(cost, hops, node-id sequence from the DU)`` so ties
    go to fewer hops and then to the lexicographically smallest node sequence.
    Links are traversable in both directions.
    """
    adj = _adjacency(topology)
    cu = topology.cu_id
    paths = {}
    for du in topology.du_ids:
        best = {du: (0.0, 0, (du,), ())}
        heap = [(0.0, 0, (du,), ())]
        done = set()
        found = None
        while heap:
            cost, hops, seq, edges = heapq.heappop(heap)
            node = seq[-1]
            if node in done:
                continue
            done.add(node)
            if node == cu:
                found = (seq, edges)
                break
            for nxt, k in adj[node]:
                if nxt in done:
                    continue
                label = (cost + topology.links[k].cost_per_mbps, hops + 1, seq + (nxt,), edges + (k,))
                if nxt not in best or label[:3] < best[nxt][:3]:
                    best[nxt] = label
                    heapq.heappush(heap, label)
        if found is None:
            raise Unreachable(f"DU {du} has no path to the CU")
        paths[du] = topology.route(du, *found)
    return paths


def build_topology(nodes, links) -> Topology:
    topo = Topology(nodes, links)
    return topo.with_paths(shortest_paths(topo))


# --------------------------------------------------------------------------- real networks


def great_circle_km(lat1, lon1, lat2, lon2) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp, dl = p2 - p1, math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def ingest_real(source) -> Topology:
    """Read a coordinate-based network in the plain-text format below.

    ::

        # comment
        COORDS geo            # or "planar" (x/y in km); default planar
        CU <node-name>        # optional, else the node nearest the centroid
        NODES
        <name> <x|lon> <y|lat>
        LINKS
        <a> <b> <capacity_mbps> [cost_per_mbps]

    Every non-CU node becomes a DU; routers are taken to be co-located with
    DUs. Link lengths come from the coordinates (great-circle for ``geo``);
    a missing cost is charged at 0.01 per Mbps per km.
    """
    if isinstance(source, (str, FsPath)) and "\n" not in str(source):
        text = FsPath(source).read_text()
    elif hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)

    mode = "planar"
    cu_name = None
    section = None
    raw_nodes: list = []
    raw_links: list = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0].upper()
        if head == "COORDS":
            if len(parts) != 2 or parts[1].lower() not in ("geo", "planar"):
                raise ParseError("COORDS must be 'geo' or 'planar'", lineno, "COORDS")
            mode = parts[1].lower()
        elif head == "CU":
            if len(parts) != 2:
                raise ParseError("CU takes exactly one node name", lineno, "CU")
            cu_name = parts[1]
        elif head in ("NODES", "LINKS"):
            section = head
        elif section == "NODES":
            if len(parts) != 3:
                raise ParseError("node lines are '<name> <x> <y>'", lineno, "NODES")
            x = _number(parts[1], lineno, "x")
            y = _number(parts[2], lineno, "y")
            raw_nodes.append((parts[0], x, y, lineno))
        elif section == "LINKS":
            if len(parts) not in (3, 4):
                raise ParseError("link lines are '<a> <b> <capacity> [cost]'", lineno, "LINKS")
            cap = _number(parts[2], lineno, "capacity_mbps")
            cost = _number(parts[3], lineno, "cost_per_mbps") if len(parts) == 4 else None
            raw_links.append((parts[0], parts[1], cap, cost, lineno))
        else:
            raise ParseError(f"unexpected content {parts[0]!r} outside a section", lineno)

    if not raw_nodes:
        raise ParseError("no NODES section", None, "NODES")
    names = [r[0] for r in raw_nodes]
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        line = next(r[3] for r in raw_nodes if r[0] == dup)
        raise ParseError(f"duplicate node {dup!r}", line, "NODES")
    if mode == "geo":
        for name, lon, lat, line in raw_nodes:
            if not (-180 <= lon <= 180 and -90 <= lat <= 90):
                raise ParseError(f"node {name!r} has out-of-range lon/lat", line, "coords")

    if cu_name is None:
        # planar centroid even for geo: only used to pick the CU
        cx = sum(r[1] for r in raw_nodes) / len(raw_nodes)
        cy = sum(r[2] for r in raw_nodes) / len(raw_nodes)
        cu_name = min(raw_nodes, key=lambda r: ((r[1] - cx) ** 2 + (r[2] - cy) ** 2))[0]
    elif cu_name not in names:
        raise ParseError(f"CU {cu_name!r} is not a declared node", None, "CU")

    ordered = [r for r in raw_nodes if r[0] == cu_name] + [r for r in raw_nodes if r[0] != cu_name]
    ids = {r[0]: i for i, r in enumerate(ordered)}
    coords = {r[0]: (r[1], r[2]) for r in ordered}

    def distance(a, b):
        (x1, y1), (x2, y2) = coords[a], coords[b]
        if mode == "geo":
            return great_circle_km(y1, x1, y2, x2)
        return math.hypot(x1 - x2, y1 - y2)

    nodes = []
    for name, x, y, _ in ordered:
        kind = "CU" if name == cu_name else "DU"
        if mode == "planar":
            nodes.append(Node(ids[name], kind, x, y))
        else:
            nodes.append(Node(ids[name], kind))
    links = []
    for a, b, cap, cost, line in raw_links:
        for end in (a, b):
            if end not in ids:
                raise ParseError(f"link endpoint {end!r} is not a declared node", line, "LINKS")
        if cap <= 0:
            raise ParseError("capacity must be positive", line, "capacity_mbps")
        length = distance(a, b)
        if cost is None:
            cost = REAL_COST_PER_MBPS_KM * length
        elif cost < 0:
            raise ParseError("cost must be >= 0", line, "cost_per_mbps")
        links.append(Link(ids[a], ids[b], cap, cost, length))
    try:
        return build_topology(nodes, links)
    except (InvalidTopology, Unreachable) as exc:
        raise ParseError(str(exc)) from exc


def _number(token: str, line: int, name: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"{name} is not a number: {token!r}", line, name) from None
    if not math.isfinite(value):
        raise ParseError(f"{name} must be finite", line, name)
    return value
