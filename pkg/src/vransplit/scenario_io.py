"""Scenario JSON documents.

Layout (unknown keys anywhere are rejected)::

    {
      "nodes": [{"id": 0, "kind": "CU", "x_km": 1.0, "y_km": 2.0}, ...],
      "links": [{"a": 0, "b": 1, "capacity_mbps": 1e4, "cost_per_mbps": 0.002}, ...],
      "traffic_mbps": [150.0, ...],
      "params": {"cap_cu": 75.0, ...}
    }

``x_km``/``y_km`` may be omitted or null. A link may carry an optional
``length_km`` that overrides the coordinate distance. ``params`` may be
partial; missing entries take the :class:`SystemParams` defaults. Routes are
not stored: they are recomputed with :func:`shortest_paths` on load.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, fields
from pathlib import Path

from .errors import InvalidTopology, ParseError, Unreachable
from .model import Link, Node, Scenario, SystemParams
from .topology import build_topology

_TOP = {"nodes", "links", "traffic_mbps", "params"}
_NODE = {"id", "kind", "x_km", "y_km"}
_NODE_REQ = {"id", "kind"}
_LINK = {"a", "b", "capacity_mbps", "cost_per_mbps", "length_km"}
_LINK_REQ = {"a", "b", "capacity_mbps", "cost_per_mbps"}
_PARAMS = {f.name for f in fields(SystemParams)}


def _check_keys(obj, allowed, required, where):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", field=where)
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ParseError(f"unknown field(s) {unknown}", field=where)
    missing = sorted(required - set(obj))
    if missing:
        raise ParseError(f"missing field(s) {missing}", field=where)


def _num(value, where, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ParseError(f"expected a finite number, got {value!r}", field=where)
    return float(value)


def scenario_from_dict(doc: dict) -> Scenario:
    _check_keys(doc, _TOP, {"nodes", "links", "traffic_mbps"}, "<root>")
    nodes = []
    for i, raw in enumerate(doc["nodes"]):
        where = f"nodes[{i}]"
        _check_keys(raw, _NODE, _NODE_REQ, where)
        if not isinstance(raw["id"], int) or isinstance(raw["id"], bool):
            raise ParseError("id must be an integer", field=f"{where}.id")
        nodes.append(Node(raw["id"], raw["kind"], _num(raw.get("x_km"), f"{where}.x_km", True),
                          _num(raw.get("y_km"), f"{where}.y_km", True)))
    links = []
    for i, raw in enumerate(doc["links"]):
        where = f"links[{i}]"
        _check_keys(raw, _LINK, _LINK_REQ, where)
        links.append(Link(raw["a"], raw["b"], _num(raw["capacity_mbps"], f"{where}.capacity_mbps"),
                          _num(raw["cost_per_mbps"], f"{where}.cost_per_mbps"),
                          _num(raw.get("length_km"), f"{where}.length_km", True)))
    params_doc = doc.get("params", {}) or {}
    _check_keys(params_doc, _PARAMS, set(), "params")
    try:
        params = SystemParams(**params_doc)
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), field="params") from exc
    problems = params.monotonicity_problems()
    if problems:
        raise ParseError("; ".join(problems), field="params")
    traffic = [_num(v, f"traffic_mbps[{i}]") for i, v in enumerate(doc["traffic_mbps"])]
    try:
        topo = build_topology(nodes, links)
        return Scenario(topo, tuple(traffic), params)
    except (InvalidTopology, Unreachable, ValueError) as exc:
        raise ParseError(str(exc)) from exc


def scenario_to_dict(scenario: Scenario) -> dict:
    topo = scenario.topology
    nodes = []
    for n in topo.nodes:
        d = {"id": n.id, "kind": n.kind}
        if n.has_coords:
            d["x_km"], d["y_km"] = n.x_km, n.y_km
        nodes.append(d)
    links = []
    for link in topo.links:
        d = {"a": link.a, "b": link.b, "capacity_mbps": link.capacity_mbps,
             "cost_per_mbps": link.cost_per_mbps}
        if link.length_km is not None:
            d["length_km"] = link.length_km
        links.append(d)
    params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(scenario.params).items()}
    return {"nodes": nodes, "links": links, "traffic_mbps": list(scenario.traffic), "params": params}


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    return scenario_from_dict(doc)


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=1) + "\n")
