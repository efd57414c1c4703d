"""Experiment drivers: gap histograms, parameter sweeps and timing tables.

Every driver writes one CSV plus a ``<name>.manifest.json`` with the run
settings, a hash of those settings, seeds and package versions. CSV rows are
re-validated after writing: the logged split vector is re-evaluated and must
reproduce the logged cost to 1e-9 relative.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MissingCheckpoint
from .exact import solve_bruteforce, solve_exact
from .inference import DEFAULT_SAMPLES, DEFAULT_TEMPERATURE, infer_greedy, infer_temperature, load_models
from .model import Scenario, evaluate, fixed_baseline_cost
from .scenario_io import scenario_to_dict

OUTPUT_ENV = "VRANSPLIT_OUTPUT_DIR"
SOLVERS = ("Exact", "BruteForce", "CDRS-Fixed-G", "CDRS-Fixed-T", "CDRS-Ada-G", "CDRS-Ada-T", "DRAN", "CRAN")
ORDER_FREE = ("Exact", "BruteForce", "DRAN", "CRAN")
GAP_BINS = (0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, math.inf)
ROUTING_SCALES = (0.1, 0.25, 0.5, 0.75, 1.0)
TRAFFIC_LOADS = (10.0, 50.0, 100.0, 150.0)


def output_dir(explicit=None) -> Path:
    """Explicit path, else ``$VRANSPLIT_OUTPUT_DIR``, else ``./runs``."""
    return Path(explicit or os.environ.get(OUTPUT_ENV) or "runs")


@dataclass
class ExperimentSpec:
    scenario: Scenario
    solvers: tuple = ("Exact", "CDRS-Fixed-G", "CDRS-Fixed-T", "DRAN", "CRAN")
    models_fixed: tuple = ()
    models_ada: tuple = ()
    tests: int = 128
    seed: int = 0
    temperature: float = DEFAULT_TEMPERATURE
    samples: int = DEFAULT_SAMPLES
    axis: str = "none"  # "routing" or "traffic" for sweeps
    values: tuple = ()
    out_dir: Path | None = None
    _loaded: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        unknown = [s for s in self.solvers if s not in SOLVERS]
        if not self.solvers or unknown:
            raise ValueError(f"solvers must be a non-empty subset of {SOLVERS}; unknown {unknown}")
        if self.tests < 1:
            raise ValueError("tests must be >= 1")
        if any(v < 0 for v in self.values) or (self.axis == "traffic" and any(v <= 0 for v in self.values)):
            raise ValueError("sweep values must be positive")
        if self.axis not in ("none", "routing", "traffic"):
            raise ValueError("axis must be none, routing or traffic")
        self.out_dir = output_dir(self.out_dir)

    def models(self, family: str) -> list:
        if family not in self._loaded:
            paths = self.models_fixed if family == "Fixed" else self.models_ada
            if not paths:
                raise MissingCheckpoint(f"no checkpoints given for CDRS-{family}")
            self._loaded[family] = load_models(paths)
        return self._loaded[family]

    def describe(self) -> dict:
        return {"scenario": scenario_to_dict(self.scenario), "solvers": list(self.solvers),
                "models_fixed": [str(p) for p in self.models_fixed],
                "models_ada": [str(p) for p in self.models_ada], "tests": self.tests, "seed": self.seed,
                "temperature": self.temperature, "samples": self.samples, "axis": self.axis,
                "values": list(self.values)}

    def hash(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def test_orders(n: int, tests: int, seed: int) -> np.ndarray:
    """Presentation orders for each test; test 0 is the identity order."""
    rng = np.random.Generator(np.random.PCG64(seed))
    orders = [np.arange(n)]
    for _ in range(tests - 1):
        orders.append(rng.permutation(n))
    return np.array(orders, dtype=np.int64).reshape(tests, n)


def run_solver(name: str, spec: ExperimentSpec, scenario: Scenario, order=None, test: int = 0):
    """Run one solver; returns ``(assignment, EvalReport)``."""
    if name == "Exact":
        r = solve_exact(scenario)
        return r.assignment, r.report
    if name == "BruteForce":
        r = solve_bruteforce(scenario)
        return r.assignment, r.report
    if name in ("DRAN", "CRAN"):
        rep = fixed_baseline_cost(scenario, name)
        return rep.assignment, rep
    family, strategy = name.split("-")[1:]
    models = spec.models(family)
    if strategy == "G":
        res = infer_greedy(models, scenario, order=order)
    else:
        res = infer_temperature(models, scenario, spec.temperature, spec.samples,
                                seed=_derive(spec.seed, test), order=order)
    return res.assignment, res.report


def _derive(seed: int, test: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(test), 7]).generate_state(1)[0])


def assignment_str(x) -> str:
    return "".join(str(int(v)) for v in x)


def _num(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())


def _write_manifest(spec: ExperimentSpec, name: str, files: list, revalidated: bool, extra=None) -> Path:
    manifest = {"experiment": name, "spec_hash": spec.hash(), "seed": spec.seed,
                "settings": {k: v for k, v in spec.describe().items() if k != "scenario"},
                "files": [Path(f).name for f in files], "revalidated": revalidated,
                "versions": {"vransplit": _version(), "numpy": np.__version__,
                             "python": platform.python_version()}}
    if extra:
        manifest.update(extra)
    path = spec.out_dir / f"{name}.manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return path


def _version() -> str:
    from . import __version__
    return __version__


def revalidate(path: Path, scenario_for) -> list:
    """Re-evaluate every CSV row; returns a list of mismatch descriptions."""
    problems = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.DictReader(fh), start=2):
            x = [int(c) for c in row["assignment"]]
            rep = evaluate(scenario_for(row), x)
            logged = float(row["J"])
            if abs(rep.total_cost - logged) > 1e-9 * max(1.0, abs(logged)):
                problems.append(f"{path.name}:{i}: logged J {logged!r} vs re-evaluated {rep.total_cost!r}")
            if str(rep.feasible) != row["feasible"]:
                problems.append(f"{path.name}:{i}: feasibility flag mismatch")
    return problems


@dataclass
class ExperimentResult:
    csv_path: Path
    manifest_path: Path
    problems: list
    summary: dict

    @property
    def ok(self) -> bool:
        return not self.problems


# --------------------------------------------------------------------------- histogram


HIST_HEADER = ("test", "solver", "order", "assignment", "J", "gap_pct", "feasible")


def gap_pct(j: float, j_opt: float, feasible: bool):
    if not feasible:
        return None
    return max(0.0, 100.0 * (j - j_opt) / j_opt) if j_opt else 0.0


def bin_counts(gaps) -> list:
    """Counts per gap bin ``[lo, hi)`` plus a final bucket for infeasible outputs."""
    counts = [0] * len(GAP_BINS)
    for g in gaps:
        if g is None:
            counts[-1] += 1
            continue
        for k in range(len(GAP_BINS) - 1):
            if GAP_BINS[k] <= g < GAP_BINS[k + 1]:
                counts[k] += 1
                break
    return counts


def run_gap_histogram(spec: ExperimentSpec, name: str = "histogram") -> ExperimentResult:
    sc = spec.scenario
    ref = solve_exact(sc).report
    orders = test_orders(sc.n_du, spec.tests, spec.seed)
    fixed = {s: run_solver(s, spec, sc) for s in spec.solvers if s in ORDER_FREE}
    rows, gaps = [], {s: [] for s in spec.solvers}
    for t, order in enumerate(orders):
        for s in spec.solvers:
            x, rep = fixed[s] if s in fixed else run_solver(s, spec, sc, order, t)
            g = gap_pct(rep.total_cost, ref.total_cost, rep.feasible)
            gaps[s].append(g)
            rows.append([t, s, "-".join(map(str, order)), assignment_str(x), _num(rep.total_cost),
                         _num(g), str(rep.feasible)])
    path = spec.out_dir / f"{name}.csv"
    _write_csv(path, HIST_HEADER, rows)
    bins_path = spec.out_dir / f"{name}_bins.csv"
    labels = [f"[{GAP_BINS[k]},{GAP_BINS[k + 1]})" for k in range(len(GAP_BINS) - 1)] + ["infeasible"]
    _write_csv(bins_path, ("solver", *labels), [[s, *bin_counts(gaps[s])] for s in spec.solvers])
    problems = revalidate(path, lambda row: sc)
    summary = {s: _gap_stats(gaps[s]) for s in spec.solvers}
    manifest = _write_manifest(spec, name, [path, bins_path], not problems,
                               {"optimal_J": ref.total_cost, "summary": summary})
    return ExperimentResult(path, manifest, problems, summary)


def _gap_stats(gaps) -> dict:
    finite = [g for g in gaps if g is not None]
    if not finite:
        return {"feasible": 0, "median": None, "mean": None, "max": None}
    return {"feasible": len(finite), "median": float(np.median(finite)), "mean": float(np.mean(finite)),
            "max": float(np.max(finite))}


# --------------------------------------------------------------------------- sweep


SWEEP_HEADER = ("axis", "value", "test", "solver", "assignment", "J", "J_norm_cran", "feasible")


def sweep_scenario(base: Scenario, axis: str, value: float) -> Scenario:
    if axis == "routing":
        return base.with_routing_scale(value)
    if axis == "traffic":
        return base.with_traffic(value)
    raise ValueError("sweep axis must be routing or traffic")


def run_sweep(spec: ExperimentSpec, name: str | None = None) -> ExperimentResult:
    axis = spec.axis if spec.axis != "none" else "routing"
    values = spec.values or (ROUTING_SCALES if axis == "routing" else TRAFFIC_LOADS)
    name = name or f"sweep_{axis}"
    orders = test_orders(spec.scenario.n_du, spec.tests, spec.seed)
    rows, scenarios, summary = [], {}, {}
    for v in values:
        sc = sweep_scenario(spec.scenario, axis, v)
        scenarios[repr(float(v))] = sc
        j_cran = fixed_baseline_cost(sc, "CRAN").total_cost
        per_solver = {}
        for s in spec.solvers:
            runs = [(0, None)] if s in ORDER_FREE else list(enumerate(orders))
            js = []
            for t, order in runs:
                x, rep = run_solver(s, spec, sc, order, t)
                js.append(rep.total_cost if rep.feasible else None)
                rows.append([axis, _num(v), t, s, assignment_str(x), _num(rep.total_cost),
                             _num(rep.total_cost / j_cran), str(rep.feasible)])
            ok = [j for j in js if j is not None]
            per_solver[s] = float(np.mean(ok)) if ok else None
        summary[repr(float(v))] = per_solver
    path = spec.out_dir / f"{name}.csv"
    _write_csv(path, SWEEP_HEADER, rows)
    problems = revalidate(path, lambda row: scenarios[repr(float(row["value"]))])
    manifest = _write_manifest(spec, name, [path], not problems, {"axis": axis, "summary": summary})
    return ExperimentResult(path, manifest, problems, summary)


# --------------------------------------------------------------------------- timing


TIMING_HEADER = ("solver", "repetitions", "mean_s", "min_s", "ratio_vs_exact", "assignment", "J", "feasible")


def run_timing(spec: ExperimentSpec, repetitions: int = 128, name: str = "timing") -> ExperimentResult:
    """Mean wall-clock per solve after one untimed warm-up run.

    Wall-clock numbers vary between runs, so this CSV is not expected to be
    byte-identical across reruns.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    sc = spec.scenario
    orders = test_orders(sc.n_du, repetitions, spec.seed)
    stats, results = {}, {}
    for s in spec.solvers:
        run_solver(s, spec, sc, orders[0], 0)  # warm-up
        times = []
        for t in range(repetitions):
            start = time.perf_counter()
            out = run_solver(s, spec, sc, orders[t], t)
            times.append(time.perf_counter() - start)
            if t == 0:
                results[s] = out
        stats[s] = (float(np.mean(times)), float(np.min(times)))
    exact_mean = stats.get("Exact", (None,))[0]
    rows = []
    for s in spec.solvers:
        mean_s, min_s = stats[s]
        x, rep = results[s]
        ratio = exact_mean / mean_s if exact_mean and mean_s > 0 else None
        rows.append([s, repetitions, _num(mean_s), _num(min_s), _num(ratio), assignment_str(x),
                     _num(rep.total_cost), str(rep.feasible)])
    path = spec.out_dir / f"{name}.csv"
    _write_csv(path, TIMING_HEADER, rows)
    problems = revalidate(path, lambda row: sc)
    summary = {s: {"mean_s": stats[s][0], "speedup_vs_exact": (exact_mean / stats[s][0]) if exact_mean else None}
               for s in spec.solvers}
    manifest = _write_manifest(spec, name, [path], not problems, {"repetitions": repetitions})
    return ExperimentResult(path, manifest, problems, summary)
