"""Command line entry point: ``vransplit {gen,solve,train,infer,experiment}``.

Exit status is 0 on success, 1 when a run fails or a result does not
re-validate, and 2 for usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import benchmark
from .errors import VranError
from .exact import solve_bruteforce, solve_exact
from .experiments import (SOLVERS, ExperimentSpec, output_dir, run_gap_histogram, run_sweep,
                          run_timing)
from .inference import (DEFAULT_SAMPLES, DEFAULT_TEMPERATURE, infer_greedy, infer_temperature,
                        optimality_gap)
from .model import SystemParams, Scenario, evaluate
from .scenario_io import load_scenario, save_scenario
from .topology import WaxmanConfig, generate_waxman, ingest_real
from .train import ADAPTIVE, FIXED, TrainConfig, pretrain_ensemble, train


def _report_dict(assignment, report, **extra) -> dict:
    d = {"assignment": list(assignment), "total_cost": report.total_cost, "feasible": report.feasible,
         "violations": dict(zip(("cu", "du", "link", "delay"), report.violations.aggregate()))}
    d.update(extra)
    return d


def _emit(doc: dict, path) -> None:
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _scenario(args) -> Scenario:
    if getattr(args, "benchmark", None):
        return benchmark.named(args.benchmark)
    if not getattr(args, "scenario", None):
        raise SystemExit("a scenario file or --benchmark is required")
    return load_scenario(args.scenario)


# --------------------------------------------------------------------------- subcommands


def cmd_gen(args) -> int:
    if args.benchmark:
        sc = benchmark.named(args.benchmark)
    else:
        if args.real:
            topo = ingest_real(Path(args.real).read_text())
        else:
            topo = generate_waxman(WaxmanConfig(
                n_du=args.n_du, n_router=args.n_router, alpha=args.alpha, beta=args.beta, area=args.area,
                capacity_range=(args.cap_min, args.cap_max), link_cost_range=(args.cost_min, args.cost_max),
                seed=args.seed))
        sc = Scenario(topo, (args.traffic,) * topo.n_du, SystemParams(cap_cu=args.cap_cu))
    out = Path(args.output) if args.output else output_dir() / "scenario.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_scenario(sc, out)
    print(out)
    return 0


def cmd_solve(args) -> int:
    sc = _scenario(args)
    if args.oracle:
        res = solve_bruteforce(sc, backend=args.backend)
    else:
        res = solve_exact(sc, time_budget=args.time_budget, backend=args.backend)
    _emit(_report_dict(res.assignment, res.report, proof=res.proof, nodes=res.nodes), args.output)
    return 0


def cmd_train(args) -> int:
    sc = _scenario(args)
    cfg = TrainConfig(epochs=args.epochs, batch=args.batch, lr_agent=args.lr_agent, lr_critic=args.lr_critic,
                      mode=args.mode, mu=args.mu, eta_d=args.eta_d, seed=args.seed, hidden=args.hidden,
                      embed=args.embed, augment=args.augment, clip_norm=args.clip_norm,
                      checkpoint_every=args.checkpoint_every)
    out = output_dir(args.out)
    prefix = args.prefix or f"cdrs_{args.mode}_"
    if args.resume:
        ckpt = Path(args.resume)
        train(cfg, sc, resume=ckpt, checkpoint_path=ckpt, log_path=ckpt.with_suffix(".csv"))
        print(ckpt)
        return 0
    for p in pretrain_ensemble(cfg, sc, args.models, out, prefix=prefix):
        print(p)
    return 0


def cmd_infer(args) -> int:
    sc = _scenario(args)
    if args.strategy == "greedy":
        res = infer_greedy(args.models, sc)
    else:
        res = infer_temperature(args.models, sc, T=args.temp, samples=args.samples, seed=args.seed)
    extra = {"strategy": args.strategy, "candidates": res.candidates}
    if args.reference:
        ref = json.loads(Path(args.reference).read_text())
        ref_report = evaluate(sc, ref["assignment"])
        extra["reference_cost"] = ref_report.total_cost
        extra["gap_pct"] = optimality_gap(res.report, ref_report) if res.feasible else None
    _emit(_report_dict(res.assignment, res.report, **extra), args.output)
    return 0


def cmd_experiment(args) -> int:
    sc = _scenario(args)
    spec = ExperimentSpec(sc, solvers=tuple(args.solvers), models_fixed=tuple(args.fixed_models or ()),
                          models_ada=tuple(args.ada_models or ()), tests=args.tests, seed=args.seed,
                          temperature=args.temp, samples=args.samples, axis=args.axis,
                          values=tuple(args.values or ()), out_dir=args.out)
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    if args.kind == "histogram":
        res = run_gap_histogram(spec)
    elif args.kind == "sweep":
        res = run_sweep(spec)
    else:
        res = run_timing(spec, repetitions=args.repetitions)
    print(res.csv_path)
    for p in res.problems:
        print(p, file=sys.stderr)
    return 0 if res.ok else 1


# --------------------------------------------------------------------------- parser


def _add_scenario_args(p):
    p.add_argument("scenario", nargs="?", help="scenario JSON file")
    p.add_argument("--benchmark", choices=benchmark.NAMES, help="use a built-in benchmark scenario")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vransplit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a scenario file")
    p.add_argument("--benchmark", choices=benchmark.NAMES)
    p.add_argument("--real", help="real topology text file to ingest instead of a random graph")
    p.add_argument("--n-du", type=int, default=10)
    p.add_argument("--n-router", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--area", type=float, default=300.0, help="square side in km")
    p.add_argument("--cap-min", type=float, default=1000.0)
    p.add_argument("--cap-max", type=float, default=100000.0)
    p.add_argument("--cost-min", type=float, default=0.001)
    p.add_argument("--cost-max", type=float, default=0.01)
    p.add_argument("--traffic", type=float, default=150.0, help="load per BS in Mbps")
    p.add_argument("--cap-cu", type=float, default=75.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="exact optimum of a scenario")
    _add_scenario_args(p)
    p.add_argument("--time-budget", type=float, default=None, help="seconds; returns best found on expiry")
    p.add_argument("--oracle", action="store_true", help="use exhaustive enumeration")
    p.add_argument("--backend", choices=("python", "cython"))
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("train", help="train one or more policies")
    _add_scenario_args(p)
    d = TrainConfig()
    p.add_argument("--epochs", type=int, default=d.epochs)
    p.add_argument("--batch", type=int, default=d.batch)
    p.add_argument("--lr-agent", type=float, default=d.lr_agent)
    p.add_argument("--lr-critic", type=float, default=d.lr_critic)
    p.add_argument("--mode", choices=(FIXED, ADAPTIVE), default=FIXED)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--eta-d", type=float, default=d.eta_d)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden", type=int, default=d.hidden)
    p.add_argument("--embed", type=int, default=d.embed)
    p.add_argument("--augment", action=argparse.BooleanOptionalAction, default=True,
                   help="random rescaling of load and cost features")
    p.add_argument("--clip-norm", type=float, default=None)
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--models", type=int, default=1, help="number of independently seeded models")
    p.add_argument("--prefix", help="checkpoint file prefix")
    p.add_argument("--resume", help="continue training this checkpoint up to --epochs")
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="decode a scenario with trained policies")
    _add_scenario_args(p)
    p.add_argument("--models", nargs="+", required=True)
    p.add_argument("--strategy", choices=("greedy", "temperature"), default="temperature")
    p.add_argument("--temp", type=float, default=DEFAULT_TEMPERATURE)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reference", help="JSON report from `solve` to compute the optimality gap")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("experiment", help="histogram, sweep or timing runs")
    p.add_argument("kind", choices=("histogram", "sweep", "timing"))
    _add_scenario_args(p)
    p.add_argument("--solvers", nargs="+", choices=SOLVERS,
                   default=["Exact", "CDRS-Fixed-G", "CDRS-Fixed-T", "DRAN", "CRAN"])
    p.add_argument("--fixed-models", nargs="+")
    p.add_argument("--ada-models", nargs="+")
    p.add_argument("--tests", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--temp", type=float, default=DEFAULT_TEMPERATURE)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--axis", choices=("routing", "traffic"), default="routing")
    p.add_argument("--values", nargs="+", type=float)
    p.add_argument("--repetitions", type=int, default=128)
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (VranError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
