import json

import pytest

from vransplit import benchmark
from vransplit.errors import ParseError
from vransplit.model import evaluate
from vransplit.scenario_io import load_scenario, save_scenario, scenario_from_dict, scenario_to_dict


def test_round_trip(tmp_path):
    sc = benchmark.standard()
    path = tmp_path / "s.json"
    save_scenario(sc, path)
    back = load_scenario(path)
    assert back.traffic == sc.traffic and back.params == sc.params
    assert back.topology.paths == sc.topology.paths
    assert evaluate(back, [2] * 10) == evaluate(sc, [2] * 10)


def test_field_names():
    doc = scenario_to_dict(benchmark.toy6())
    assert set(doc) == {"nodes", "links", "traffic_mbps", "params"}
    assert set(doc["nodes"][0]) == {"id", "kind", "x_km", "y_km"}
    assert set(doc["links"][0]) == {"a", "b", "capacity_mbps", "cost_per_mbps"}


def minimal():
    return {"nodes": [{"id": 0, "kind": "CU"}, {"id": 1, "kind": "DU"}],
            "links": [{"a": 0, "b": 1, "capacity_mbps": 1e4, "cost_per_mbps": 0.001, "length_km": 2.0}],
            "traffic_mbps": [100.0]}


def test_partial_params_use_defaults():
    doc = minimal()
    doc["params"] = {"cap_cu": 40.0}
    sc = scenario_from_dict(doc)
    assert sc.params.cap_cu == 40.0 and sc.params.cap_du == 7.5


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d.update(extra=1), "<root>"),
    (lambda d: d["nodes"][0].update(colour="red"), "nodes[0]"),
    (lambda d: d["links"][0].update(delay=3), "links[0]"),
    (lambda d: d.update(params={"bogus": 1}), "params"),
    (lambda d: d["links"][0].update(capacity_mbps="fast"), "links[0].capacity_mbps"),
    (lambda d: d.update(traffic_mbps=[float("nan")]), "traffic_mbps[0]"),
])
def test_rejects_bad_documents(mutate, field):
    doc = minimal()
    mutate(doc)
    with pytest.raises(ParseError) as err:
        scenario_from_dict(doc)
    assert err.value.field == field


def test_traffic_count_mismatch():
    doc = minimal()
    doc["traffic_mbps"] = [1.0, 2.0]
    with pytest.raises(ParseError):
        scenario_from_dict(doc)


def test_bad_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n"nodes": [,]\n}')
    with pytest.raises(ParseError) as err:
        load_scenario(p)
    assert err.value.line == 2


def test_saved_file_is_plain_json(tmp_path):
    p = tmp_path / "s.json"
    save_scenario(benchmark.toy6(), p)
    assert json.loads(p.read_text())["traffic_mbps"] == [150.0] * 6
