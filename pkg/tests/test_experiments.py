import csv
import json

import numpy as np
import pytest

from vransplit import benchmark, experiments
from vransplit.errors import MissingCheckpoint
from vransplit.experiments import (GAP_BINS, ExperimentSpec, bin_counts, gap_pct, output_dir, revalidate,
                                   run_gap_histogram, run_sweep, run_timing)
from vransplit.model import fixed_baseline_cost
from vransplit.train import TrainConfig, pretrain_ensemble


@pytest.fixture(scope="module")
def models(tmp_path_factory):
    out = tmp_path_factory.mktemp("models")
    return tuple(pretrain_ensemble(TrainConfig(epochs=3, batch=8, hidden=8, embed=8), benchmark.toy6(), 2, out))


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_exact_against_itself(tmp_path):
    spec = ExperimentSpec(benchmark.toy6(), solvers=("Exact", "BruteForce"), tests=5, out_dir=tmp_path)
    res = run_gap_histogram(spec)
    assert res.ok
    assert all(float(r["gap_pct"]) == 0.0 for r in rows(res.csv_path))


def test_histogram_cardinality_and_bins(tmp_path, models):
    solvers = ("Exact", "CDRS-Fixed-G", "CDRS-Fixed-T", "DRAN", "CRAN")
    spec = ExperimentSpec(benchmark.toy6(), solvers=solvers, models_fixed=models, tests=128, samples=2,
                          out_dir=tmp_path)
    res = run_gap_histogram(spec)
    assert res.ok
    data = rows(res.csv_path)
    for s in solvers:
        assert sum(r["solver"] == s for r in data) == 128
    bins = rows(tmp_path / "histogram_bins.csv")
    total = sum(int(v) for r in bins for k, v in r.items() if k != "solver")
    assert total == 128 * len(solvers)
    manifest = json.loads(res.manifest_path.read_text())
    assert manifest["spec_hash"] == spec.hash() and manifest["revalidated"]


def test_orders_are_permutations():
    orders = experiments.test_orders(7, 20, 3)
    assert np.all(orders[0] == np.arange(7))
    assert all(sorted(o) == list(range(7)) for o in orders)
    assert len({tuple(o) for o in orders}) > 10


def test_bins():
    assert len(bin_counts([])) == len(GAP_BINS)
    assert bin_counts([0.0, 0.05, 3.0, 1e9, None]) == [2, 0, 0, 0, 0, 1, 0, 1, 1]
    assert gap_pct(10.0, 10.0, True) == 0.0 and gap_pct(5.0, 10.0, False) is None


def test_routing_sweep(tmp_path):
    sc = benchmark.toy8()
    spec = ExperimentSpec(sc, solvers=("Exact", "DRAN", "CRAN"), tests=3, axis="routing",
                          values=(0.0, 0.1, 0.5, 1.0), out_dir=tmp_path)
    res = run_sweep(spec)
    assert res.ok
    data = rows(res.csv_path)
    exact = [float(r["J"]) for r in data if r["solver"] == "Exact"]
    assert exact == sorted(exact)
    for r in data:
        if r["solver"] == "DRAN":
            v = float(r["value"])
            scaled = sc.with_routing_scale(v)
            want = fixed_baseline_cost(scaled, "DRAN").total_cost / fixed_baseline_cost(scaled, "CRAN").total_cost
            assert float(r["J_norm_cran"]) == pytest.approx(want, rel=1e-12)


def test_zero_routing_scale_has_no_routing_cost():
    from vransplit.exact import solve_exact
    rep = solve_exact(benchmark.toy8().with_routing_scale(0.0)).report
    assert all(u == 0 for u in rep.routing_costs)


def test_traffic_sweep(tmp_path):
    spec = ExperimentSpec(benchmark.toy6(), solvers=("Exact",), tests=1, axis="traffic", out_dir=tmp_path)
    res = run_sweep(spec)
    j = [float(r["J"]) for r in rows(res.csv_path)]
    assert len(j) == 4 and j == sorted(j)


def test_sweep_is_byte_identical(tmp_path, models):
    def once(d):
        spec = ExperimentSpec(benchmark.toy6(), solvers=("Exact", "CDRS-Fixed-T", "DRAN"), models_fixed=models,
                              tests=4, samples=3, axis="routing", values=(0.25, 1.0), out_dir=d)
        return run_sweep(spec).csv_path.read_bytes()
    assert once(tmp_path / "a") == once(tmp_path / "b")


def test_timing(tmp_path, models):
    spec = ExperimentSpec(benchmark.toy6(), solvers=("Exact", "CDRS-Fixed-G", "CDRS-Fixed-T"),
                          models_fixed=models, out_dir=tmp_path)
    res = run_timing(spec, repetitions=1)
    data = rows(res.csv_path)
    assert [r["repetitions"] for r in data] == ["1"] * 3
    assert float(data[0]["ratio_vs_exact"]) == pytest.approx(1.0)


def test_revalidation_catches_tampering(tmp_path):
    spec = ExperimentSpec(benchmark.toy6(), solvers=("DRAN",), tests=2, out_dir=tmp_path)
    path = run_gap_histogram(spec).csv_path
    text = path.read_text().splitlines()
    parts = text[1].split(",")
    parts[4] = repr(float(parts[4]) * (1 + 1e-6))
    text[1] = ",".join(parts)
    path.write_text("\n".join(text) + "\n")
    assert len(revalidate(path, lambda row: benchmark.toy6())) == 1


def test_missing_checkpoints(tmp_path):
    spec = ExperimentSpec(benchmark.toy6(), solvers=("CDRS-Ada-G",), tests=1, out_dir=tmp_path)
    with pytest.raises(MissingCheckpoint):
        run_gap_histogram(spec)


@pytest.mark.parametrize("kw", [dict(solvers=()), dict(solvers=("Oracle",)), dict(tests=0),
                                dict(axis="routing", values=(-0.1,)), dict(axis="traffic", values=(0.0,))])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        ExperimentSpec(benchmark.toy6(), **kw)


def test_output_dir_env(monkeypatch, tmp_path):
    monkeypatch.setenv("VRANSPLIT_OUTPUT_DIR", str(tmp_path))
    assert output_dir() == tmp_path
    assert output_dir("elsewhere").name == "elsewhere"
