"""Cost and constraint model for functional-split placement.

Everything here is pure: a :class:`Scenario` is immutable once built and
:func:`evaluate` returns the same report for the same inputs, bit for bit.
Summations over DUs and over links always run in DU index order so that the
solvers (which use :class:`SplitTables`) reproduce the evaluator exactly.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidTopology, MissingGeometry, NegativeCoefficient

N_SPLITS = 4
FAMILIES = ("cu", "du", "link", "delay")

# store-and-forward constants
PACKET_BITS = 12000.0
PROPAGATION_US_PER_KM = 4.0
PROCESSING_US_PER_HOP = 5.0


class SplitOption(IntEnum):
    """Functional split, ordered by increasing centralization."""

    S0 = 0  # everything at the DU (D-RAN)
    S1 = 1  # PDCP-RLC
    S2 = 2  # MAC-PHY
    S3 = 3  # PHY-RF (C-RAN)


@dataclass(frozen=True)
class SystemParams:
    """Compute loads, capacities and unit costs.

    Loads are in reference cores (RC) per Mbps; capacities in RC; delays in ms.
    The defaults are the high-load constants used for the synthetic network.
    ``cap_du`` may be a scalar shared by every DU or one value per DU.
    """

    rho_du: tuple = (0.05, 0.04, 0.00325, 0.0)
    rho_cu: tuple = (0.0, 0.001, 0.00175, 0.05)
    cap_cu: float = 75.0
    cap_du: float | tuple = 7.5
    inst_cost_du: float = 1.0
    inst_cost_cu: float = 0.5
    proc_cost_du: float = 1.0
    proc_cost_cu: float = 0.017
    delay_max: tuple = (30.0, 30.0, 2.0, 0.25)
    split3_flow: float = 2500.0

    def __post_init__(self):
        for name in ("rho_du", "rho_cu", "delay_max"):
            value = tuple(float(v) for v in getattr(self, name))
            if len(value) != N_SPLITS:
                raise DimensionMismatch(f"{name} needs {N_SPLITS} entries, got {len(value)}")
            object.__setattr__(self, name, value)
        if not isinstance(self.cap_du, (int, float)):
            object.__setattr__(self, "cap_du", tuple(float(v) for v in self.cap_du))
        scalars = [self.cap_cu, self.inst_cost_du, self.inst_cost_cu, self.proc_cost_du,
                   self.proc_cost_cu, self.split3_flow]
        caps_du = self.cap_du if isinstance(self.cap_du, tuple) else (self.cap_du,)
        values = [*self.rho_du, *self.rho_cu, *self.delay_max, *scalars, *caps_du]
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise ValueError("capacities, costs, loads and delays must be finite and >= 0")
        if max(caps_du) > self.cap_cu:
            raise ValueError("CU capacity must be at least every DU capacity")

    def monotonicity_problems(self) -> list[str]:
        problems = []
        if any(a < b for a, b in zip(self.rho_du, self.rho_du[1:])):
            problems.append("rho_du is not non-increasing in centralization order")
        if any(a > b for a, b in zip(self.rho_cu, self.rho_cu[1:])):
            problems.append("rho_cu is not non-decreasing in centralization order")
        return problems

    def warn_if_unusual(self):
        for p in self.monotonicity_problems():
            warnings.warn(p, stacklevel=2)

    def du_capacities(self, n_du: int) -> np.ndarray:
        if isinstance(self.cap_du, tuple):
            if len(self.cap_du) != n_du:
                raise DimensionMismatch(f"cap_du has {len(self.cap_du)} entries for {n_du} DUs")
            return np.array(self.cap_du, dtype=float)
        return np.full(n_du, float(self.cap_du))


def split_flow(split, load: float, params: SystemParams | None = None) -> float:
    """DU-to-CU data flow (Mbps) for one split at a given traffic load."""
    params = params or SystemParams()
    o = SplitOption(split)
    if o in (SplitOption.S0, SplitOption.S1):
        return float(load)
    if o is SplitOption.S2:
        return 1.02 * load + 1.5
    return float(params.split3_flow)


def edge_delay_us(capacity_mbps: float, length_km: float) -> float:
    """Transmission plus propagation plus per-hop processing, in microseconds."""
    transmission = 0.0 if math.isinf(capacity_mbps) else PACKET_BITS / capacity_mbps
    return transmission + PROPAGATION_US_PER_KM * length_km + PROCESSING_US_PER_HOP


def path_delay(lengths_km: Sequence[float | None], capacities_mbps: Sequence[float]) -> float:
    """One-way store-and-forward delay of a path, in milliseconds.

    ``lengths_km[i]`` is the length of the i-th edge; ``None`` means the
    geometry is unknown and raises :class:`MissingGeometry`.
    """
    if len(lengths_km) != len(capacities_mbps):
        raise DimensionMismatch("one capacity per edge is required")
    if not lengths_km:
        raise ValueError("path must contain at least one edge")
    total_us = 0.0
    for i, (length, cap) in enumerate(zip(lengths_km, capacities_mbps)):
        if length is None:
            raise MissingGeometry(f"edge {i} has no length and no coordinates")
        if not cap > 0:
            raise ValueError("link capacities must be positive")
        total_us += edge_delay_us(cap, length)
    return total_us / 1000.0


# --------------------------------------------------------------------------- topology types


@dataclass(frozen=True)
class Node:
    id: int
    kind: str  # "CU", "DU" or "Router"
    x_km: float | None = None
    y_km: float | None = None

    @property
    def has_coords(self) -> bool:
        return self.x_km is not None and self.y_km is not None


@dataclass(frozen=True)
class Link:
    a: int
    b: int
    capacity_mbps: float
    cost_per_mbps: float
    length_km: float | None = None


@dataclass(frozen=True)
class Path:
    """DU-to-CU route. ``nodes`` runs from the DU to the CU; ``edges`` are link indices."""

    nodes: tuple
    edges: tuple
    delay_ms: float
    routing_cost: float

    @property
    def hops(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class Topology:
    nodes: tuple
    links: tuple
    paths: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))
        kinds = [n.kind for n in self.nodes]
        if any(k not in ("CU", "DU", "Router") for k in kinds):
            raise InvalidTopology("node kind must be CU, DU or Router")
        if not self.nodes or kinds[0] != "CU" or kinds.count("CU") != 1:
            raise InvalidTopology("exactly one CU is required and it must be the first node")
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise InvalidTopology("node ids must be unique")
        known = set(ids)
        for k, link in enumerate(self.links):
            if link.a not in known or link.b not in known or link.a == link.b:
                raise InvalidTopology(f"link {k} ({link.a}, {link.b}) has an invalid endpoint")
            if not link.capacity_mbps > 0:
                raise InvalidTopology(f"link {k} capacity must be positive")
            if link.cost_per_mbps < 0 or not math.isfinite(link.cost_per_mbps):
                raise InvalidTopology(f"link {k} cost must be finite and >= 0")
        for du, path in self.paths.items():
            if self.nodes[self.index_of(du)].kind != "DU":
                raise InvalidTopology(f"path registered for non-DU node {du}")
            if path.nodes[0] != du or path.nodes[-1] != self.cu_id:
                raise InvalidTopology(f"path of DU {du} must run from the DU to the CU")
            for e, (u, v) in zip(path.edges, zip(path.nodes, path.nodes[1:])):
                if not 0 <= e < len(self.links) or {self.links[e].a, self.links[e].b} != {u, v}:
                    raise InvalidTopology(f"path of DU {du} uses a link that does not exist")

    @cached_property
    def _index(self) -> dict:
        return {n.id: i for i, n in enumerate(self.nodes)}

    def index_of(self, node_id: int) -> int:
        return self._index[node_id]

    @property
    def cu_id(self) -> int:
        return self.nodes[0].id

    @cached_property
    def du_ids(self) -> tuple:
        return tuple(n.id for n in self.nodes if n.kind == "DU")

    @property
    def n_du(self) -> int:
        return len(self.du_ids)

    def link_length(self, k: int) -> float | None:
        link = self.links[k]
        if link.length_km is not None:
            return link.length_km
        a, b = self.nodes[self.index_of(link.a)], self.nodes[self.index_of(link.b)]
        if not (a.has_coords and b.has_coords):
            return None
        return math.hypot(a.x_km - b.x_km, a.y_km - b.y_km)

    def route(self, du: int, node_seq: Sequence[int], edges: Sequence[int]) -> Path:
        """Build a :class:`Path` (delay and routing cost) for a DU along given links."""
        lengths = [self.link_length(e) for e in edges]
        caps = [self.links[e].capacity_mbps for e in edges]
        cost = 0.0
        for e in edges:
            cost += self.links[e].cost_per_mbps
        return Path(tuple(node_seq), tuple(edges), path_delay(lengths, caps), cost)

    def with_paths(self, paths: dict) -> "Topology":
        return Topology(self.nodes, self.links, dict(paths))

    def with_routing_scale(self, gamma: float) -> "Topology":
        """Scale every link's routing cost by ``gamma``; routes stay fixed."""
        if gamma < 0:
            raise ValueError("routing scale must be >= 0")
        links = tuple(Link(l.a, l.b, l.capacity_mbps, l.cost_per_mbps * gamma, l.length_km)
                      for l in self.links)
        scaled = Topology(self.nodes, links)
        paths = {du: scaled.route(du, p.nodes, p.edges) for du, p in self.paths.items()}
        return scaled.with_paths(paths)


# --------------------------------------------------------------------------- scenario + tables


@dataclass(frozen=True)
class SplitTables:
    """Per-DU, per-split quantities the solvers need, as dense arrays.

    Row ``n`` is the n-th DU in topology order, column ``o`` the split.
    ``path_ptr``/``path_links`` store the link indices of each DU path in CSR form.
    """

    du_cost: np.ndarray
    cu_cost: np.ndarray
    routing: np.ndarray
    cost: np.ndarray
    flow: np.ndarray
    cu_load: np.ndarray
    du_load: np.ndarray
    du_cap: np.ndarray
    delay: np.ndarray
    delay_max: np.ndarray
    allowed: np.ndarray
    path_ptr: np.ndarray
    path_links: np.ndarray
    link_cap: np.ndarray
    cap_cu: float

    @property
    def n(self) -> int:
        return self.cost.shape[0]

    @property
    def n_links(self) -> int:
        return self.link_cap.shape[0]

    def links_of(self, n: int) -> np.ndarray:
        return self.path_links[self.path_ptr[n]:self.path_ptr[n + 1]]


@dataclass(frozen=True)
class Scenario:
    topology: Topology
    traffic: tuple
    params: SystemParams = field(default_factory=SystemParams)

    def __post_init__(self):
        traffic = tuple(float(v) for v in self.traffic)
        object.__setattr__(self, "traffic", traffic)
        if len(traffic) != self.topology.n_du:
            raise DimensionMismatch(
                f"traffic has {len(traffic)} entries for {self.topology.n_du} DUs")
        if any(not math.isfinite(v) or v < 0 for v in traffic):
            raise ValueError("traffic entries must be finite and >= 0")
        missing = [du for du in self.topology.du_ids if du not in self.topology.paths]
        if missing:
            raise InvalidTopology(f"DUs without a path to the CU: {missing}")
        self.params.du_capacities(len(traffic))

    @property
    def n_du(self) -> int:
        return len(self.traffic)

    @property
    def paths(self) -> list:
        return [self.topology.paths[du] for du in self.topology.du_ids]

    def with_traffic(self, traffic) -> "Scenario":
        if np.isscalar(traffic):
            traffic = [float(traffic)] * self.n_du
        return Scenario(self.topology, tuple(traffic), self.params)

    def with_routing_scale(self, gamma: float) -> "Scenario":
        return Scenario(self.topology.with_routing_scale(gamma), self.traffic, self.params)

    @cached_property
    def tables(self) -> SplitTables:
        p = self.params
        lam = np.array(self.traffic, dtype=float)
        n = lam.shape[0]
        paths = self.paths
        zeta = np.array([pa.routing_cost for pa in paths], dtype=float).reshape(n)
        delay = np.array([pa.delay_ms for pa in paths], dtype=float).reshape(n)
        rho_d = np.array(p.rho_du)
        rho_c = np.array(p.rho_cu)

        flow = np.empty((n, N_SPLITS))
        flow[:, 0] = lam
        flow[:, 1] = lam
        flow[:, 2] = 1.02 * lam + 1.5
        flow[:, 3] = p.split3_flow
        du_cost = p.inst_cost_du + p.proc_cost_du * lam[:, None] * rho_d[None, :]
        cu_cost = p.inst_cost_cu + lam[:, None] * p.proc_cost_cu * rho_c[None, :]
        routing = zeta[:, None] * flow
        cost = (du_cost + routing) + cu_cost
        du_load = lam[:, None] * rho_d[None, :]
        cu_load = lam[:, None] * rho_c[None, :]
        du_cap = p.du_capacities(n)
        delay_max = np.array(p.delay_max)
        allowed = (du_load <= du_cap[:, None]) & (delay[:, None] <= delay_max[None, :])

        ptr = [0]
        links: list[int] = []
        for pa in paths:
            links.extend(pa.edges)
            ptr.append(len(links))
        link_cap = np.array([l.capacity_mbps for l in self.topology.links], dtype=float)
        arrays = dict(du_cost=du_cost, cu_cost=cu_cost, routing=routing, cost=cost, flow=flow,
                      cu_load=cu_load, du_load=du_load, du_cap=du_cap, delay=delay,
                      delay_max=delay_max, allowed=allowed,
                      path_ptr=np.array(ptr, dtype=np.int64),
                      path_links=np.array(links, dtype=np.int64), link_cap=link_cap)
        for a in arrays.values():
            a.setflags(write=False)
        return SplitTables(cap_cu=float(p.cap_cu), **arrays)


# --------------------------------------------------------------------------- evaluation


def _excess(load: float, cap: float) -> float:
    """Normalized positive excess of ``load`` over ``cap``."""
    if load <= cap:
        return 0.0
    return (load - cap) / cap if cap > 0 else load - cap


@dataclass(frozen=True)
class ConstraintVector:
    cu_compute: float
    du_compute: tuple
    link: tuple
    delay: tuple

    def aggregate(self) -> tuple:
        """Per-family maxima in the order cu, du, link, delay."""
        return (self.cu_compute, max(self.du_compute, default=0.0),
                max(self.link, default=0.0), max(self.delay, default=0.0))

    def is_zero(self) -> bool:
        return not any(self.aggregate())


@dataclass(frozen=True)
class EvalReport:
    total_cost: float
    du_costs: tuple
    cu_costs: tuple
    routing_costs: tuple
    flows: tuple
    violations: ConstraintVector
    feasible: bool
    assignment: tuple = ()


def as_assignment(assignment, n: int | None = None) -> tuple:
    """Normalize a split vector (ints, SplitOptions or a digit string) to a tuple of ints."""
    if isinstance(assignment, str):
        assignment = [int(ch) for ch in assignment]
    out = tuple(int(o) for o in assignment)
    if any(o < 0 or o >= N_SPLITS for o in out):
        raise ValueError(f"split indices must be in 0..{N_SPLITS - 1}")
    if n is not None and len(out) != n:
        raise DimensionMismatch(f"assignment has {len(out)} splits for {n} DUs")
    return out


def link_loads(tables: SplitTables, assignment: Sequence[int]) -> list:
    loads = [0.0] * tables.n_links
    for n, o in enumerate(assignment):
        f = tables.flow[n, o]
        for e in tables.links_of(n):
            loads[e] += f
    return loads


def evaluate(scenario: Scenario, assignment) -> EvalReport:
    """Total cost, cost components and constraint dissatisfaction of one assignment."""
    t = scenario.tables
    x = as_assignment(assignment, t.n)
    idx = range(t.n)
    V = tuple(float(t.du_cost[n, o]) for n, o in zip(idx, x))
    Vc = tuple(float(t.cu_cost[n, o]) for n, o in zip(idx, x))
    U = tuple(float(t.routing[n, o]) for n, o in zip(idx, x))
    total = 0.0
    for n, o in zip(idx, x):
        total += float(t.cost[n, o])

    cu = 0.0
    for n, o in zip(idx, x):
        cu += float(t.cu_load[n, o])
    violations = ConstraintVector(
        cu_compute=_excess(cu, t.cap_cu),
        du_compute=tuple(_excess(float(t.du_load[n, o]), float(t.du_cap[n])) for n, o in zip(idx, x)),
        link=tuple(_excess(load, float(c)) for load, c in zip(link_loads(t, x), t.link_cap)),
        delay=tuple(_excess(float(t.delay[n]), float(t.delay_max[o])) for n, o in zip(idx, x)),
    )
    return EvalReport(
        total_cost=total, du_costs=V, cu_costs=Vc, routing_costs=U,
        flows=tuple(float(t.flow[n, o]) for n, o in zip(idx, x)),
        violations=violations, feasible=violations.is_zero(), assignment=x,
    )


def penalization(report: EvalReport | ConstraintVector, mu) -> float:
    """Weighted sum of per-family constraint dissatisfaction."""
    c = report.violations if isinstance(report, EvalReport) else report
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (len(FAMILIES),))
    if np.any(mu < 0):
        raise NegativeCoefficient("penalty coefficients must be >= 0")
    xi = 0.0
    for m, ci in zip(mu, c.aggregate()):
        xi += float(m) * ci
    return xi


def fixed_baseline_cost(scenario: Scenario, mode: str) -> EvalReport:
    """All-S0 (``"DRAN"``) or all-S3 (``"CRAN"``); returned even when infeasible."""
    mode = mode.upper()
    if mode not in ("DRAN", "CRAN"):
        raise ValueError("mode must be DRAN or CRAN")
    split = SplitOption.S0 if mode == "DRAN" else SplitOption.S3
    return evaluate(scenario, [split] * scenario.n_du)


@dataclass(frozen=True)
class BatchEval:
    total_cost: np.ndarray  # (B,)
    violations: np.ndarray  # (B, 4) per-family maxima
    feasible: np.ndarray  # (B,)


def evaluate_batch(tables: SplitTables, assignments: np.ndarray) -> BatchEval:
    """Vectorized :func:`evaluate` over rows of ``assignments`` (shape ``(B, N)``).

    Agrees exactly with the scalar path: every accumulation runs in DU order.
    """
    x = np.asarray(assignments, dtype=np.int64)
    if x.ndim != 2 or x.shape[1] != tables.n:
        raise DimensionMismatch(f"expected shape (B, {tables.n}), got {x.shape}")
    B = x.shape[0]
    total = np.zeros(B)
    cu = np.zeros(B)
    du_v = np.zeros(B)
    delay_v = np.zeros(B)
    loads = np.zeros((B, tables.n_links))
    for n in range(tables.n):
        o = x[:, n]
        total += tables.cost[n, o]
        cu += tables.cu_load[n, o]
        du_v = np.maximum(du_v, _excess_vec(tables.du_load[n, o], tables.du_cap[n]))
        delay_v = np.maximum(delay_v, _excess_vec(np.full(B, tables.delay[n]), tables.delay_max[o]))
        f = tables.flow[n, o]
        for e in tables.links_of(n):
            loads[:, e] += f
    link_v = (_excess_vec(loads, tables.link_cap[None, :]).max(axis=1)
              if tables.n_links else np.zeros(B))
    viol = np.stack([_excess_vec(cu, tables.cap_cu), du_v, link_v, delay_v], axis=1)
    return BatchEval(total, viol, ~np.any(viol > 0, axis=1))


def _excess_vec(load, cap):
    load, cap = np.broadcast_arrays(np.asarray(load, dtype=float), np.asarray(cap, dtype=float))
    out = np.zeros(load.shape)
    over = load > cap
    pos = over & (cap > 0)
    out[pos] = (load[pos] - cap[pos]) / cap[pos]
    zero = over & ~(cap > 0)
    out[zero] = load[zero] - cap[zero]
    return out
