"""Exact solvers: branch and bound, and a brute-force oracle for small instances.

The problem is a multiple-choice knapsack with shared resources: pick one split
per DU, pay a separable cost, and respect the shared CU and link capacities.
Per-DU constraints (DU compute, path delay) are removed up front by only
branching on individually feasible splits.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, SearchTimeout, TooLarge
from .kernels import get_backend
from .model import EvalReport, Scenario, SplitTables, evaluate

OPTIMAL = "Optimal"
BEST_FOUND = "BestFound"
BRUTEFORCE_MAX_N = 12


@dataclass(frozen=True)
class ExactResult:
    assignment: tuple
    report: EvalReport
    proof: str
    nodes: int = 0

    @property
    def total_cost(self) -> float:
        return self.report.total_cost


def _kernel_args(t: SplitTables):
    return (t.cost, t.allowed, t.cu_load, t.cap_cu, t.flow, t.path_ptr, t.path_links, t.link_cap)


def branching_order(t: SplitTables) -> np.ndarray:
    """DUs by descending cost spread over their feasible splits (largest regret first)."""
    spread = np.zeros(t.n)
    for n in range(t.n):
        c = t.cost[n, t.allowed[n]]
        spread[n] = c.max() - c.min() if c.size else 0.0
    return np.array(sorted(range(t.n), key=lambda n: (-spread[n], n)), dtype=np.int64)


def initial_incumbent(t: SplitTables, backend=None):
    """All-S0 when feasible, else greedy cheapest-feasible per DU; ``(None, inf)`` if both fail."""
    kern = backend or get_backend()

    def check(x):
        return kern.canonical(x, t.cost, t.cu_load, t.cap_cu, t.flow, t.path_ptr,
                              t.path_links, t.link_cap)

    dran = np.zeros(t.n, dtype=np.int64)
    if t.allowed[:, 0].all():
        ok, c = check(dran)
        if ok:
            return dran, c

    x = np.zeros(t.n, dtype=np.int64)
    cu = 0.0
    loads = np.zeros(t.n_links)
    for n in range(t.n):
        links = t.links_of(n)
        opts = sorted((o for o in range(4) if t.allowed[n, o]), key=lambda o: (t.cost[n, o], o))
        for o in opts:
            if cu + t.cu_load[n, o] <= t.cap_cu and np.all(loads[links] + t.flow[n, o] <= t.link_cap[links]):
                x[n] = o
                cu += t.cu_load[n, o]
                loads[links] += t.flow[n, o]
                break
        else:
            return None, float("inf")
    ok, c = check(x)
    return (x, c) if ok else (None, float("inf"))


def solve_exact(scenario: Scenario, time_budget: float | None = None, backend: str | None = None,
                trace: list | None = None) -> ExactResult:
    """Minimum-cost feasible split assignment by depth-first branch and bound.

    Returns ``proof="Optimal"`` when the search finished, ``"BestFound"`` when the
    time budget (seconds) ran out first. Raises :class:`Infeasible` when no
    assignment satisfies the constraints.
    """
    kern = get_backend(backend)
    t = scenario.tables
    if t.n == 0:
        return ExactResult((), evaluate(scenario, ()), OPTIMAL, 0)
    order = branching_order(t)
    inc, inc_cost = initial_incumbent(t, kern)
    kwargs = {"trace": trace} if trace is not None else {}
    x, _, completed, nodes = kern.bnb(
        *_kernel_args(t), order,
        inc if inc is not None else np.zeros(0, dtype=np.int64), inc_cost,
        -1.0 if time_budget is None else float(time_budget), **kwargs)
    if x is None:
        if completed:
            raise Infeasible("no split assignment satisfies the capacity and delay constraints")
        raise SearchTimeout("time budget exhausted before a feasible assignment was found")
    assignment = tuple(int(o) for o in x)
    return ExactResult(assignment, evaluate(scenario, assignment),
                       OPTIMAL if completed else BEST_FOUND, int(nodes))


def solve_bruteforce(scenario: Scenario, backend: str | None = None) -> ExactResult:
    """Exhaustive 4^N enumeration; ties go to the lexicographically smallest assignment."""
    t = scenario.tables
    if t.n > BRUTEFORCE_MAX_N:
        raise TooLarge(f"brute force is limited to {BRUTEFORCE_MAX_N} DUs, got {t.n}")
    x, _, _ = get_backend(backend).bruteforce(*_kernel_args(t))
    if x is None:
        raise Infeasible("no split assignment satisfies the capacity and delay constraints")
    assignment = tuple(int(o) for o in x)
    return ExactResult(assignment, evaluate(scenario, assignment), OPTIMAL)
