import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import star
from oracles import brute_force
from test_model import scenarios
from vransplit import benchmark
from vransplit.errors import Infeasible, TooLarge
from vransplit.exact import BEST_FOUND, OPTIMAL, solve_bruteforce, solve_exact
from vransplit.kernels import compiled_backend, get_backend
from vransplit.model import Node, Scenario, SystemParams, evaluate
from vransplit.topology import build_topology

BACKENDS = ["python"] + (["cython"] if compiled_backend is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def test_long_path_keeps_low_splits(backend):
    # ~2.9 ms path: S2 and S3 break their delay budgets, S1 is cheaper than S0
    sc = star([700.0], caps=[160.0], costs=[0.0])
    res = solve_exact(sc, backend=backend)
    assert res.assignment == (1,) and res.proof == OPTIMAL


def test_unconstrained_all_s3(backend):
    sc = star([1.0] * 4, caps=[1e9] * 4, costs=[0.0] * 4, params=SystemParams(cap_cu=1e6, cap_du=1e6))
    assert solve_exact(sc, backend=backend).assignment == (3, 3, 3, 3)


def test_empty_bruteforce():
    nodes = [Node(0, "CU")]
    sc = Scenario(build_topology(nodes, []), ())
    res = solve_bruteforce(sc)
    assert res.assignment == () and res.total_cost == 0.0


def test_independent_dus(backend):
    sc = star([1.0, 300.0], costs=[1e-4, 1e-4])
    res = solve_bruteforce(sc, backend=backend)
    singles = [solve_bruteforce(star([l], costs=[1e-4]), backend=backend).assignment[0] for l in (1.0, 300.0)]
    assert res.assignment == tuple(singles)


def test_too_large():
    with pytest.raises(TooLarge):
        solve_bruteforce(star([1.0] * 13))


def test_infeasible(backend):
    sc = star([1.0, 1.0], caps=[100.0, 100.0], traffic=150.0)
    with pytest.raises(Infeasible):
        solve_exact(sc, backend=backend)
    with pytest.raises(Infeasible):
        solve_bruteforce(sc, backend=backend)


def test_time_budget_returns_best_found():
    sc = benchmark.timing30()
    res = solve_exact(sc, time_budget=0.0, backend="python")
    assert res.proof == BEST_FOUND and res.report.feasible


@pytest.mark.parametrize("name", ["toy6", "toy8", "standard"])
def test_matches_plain_enumeration(name):
    sc = benchmark.named(name)
    cost, x = brute_force(sc)
    res = solve_exact(sc)
    assert res.assignment == x and res.total_cost == pytest.approx(cost, rel=1e-12)


@given(scenarios(max_n=5))
def test_exact_equals_bruteforce(sc):
    try:
        ref = solve_bruteforce(sc, backend="python")
    except Infeasible:
        with pytest.raises(Infeasible):
            solve_exact(sc)
        return
    for b in BACKENDS:
        assert solve_exact(sc, backend=b).assignment == ref.assignment
        assert solve_bruteforce(sc, backend=b).assignment == ref.assignment


@given(scenarios(max_n=5))
def test_dominates_fixed_baselines(sc):
    try:
        best = solve_exact(sc).total_cost
    except Infeasible:
        return
    for o in range(4):
        r = evaluate(sc, [o] * sc.n_du)
        if r.feasible:
            assert best <= r.total_cost


@given(scenarios(max_n=5), st.floats(0, 1), st.floats(0, 1))
def test_monotone_in_routing_scale(sc, g1, g2):
    lo, hi = sorted((g1, g2))
    try:
        a = solve_exact(sc.with_routing_scale(lo)).total_cost
    except Infeasible:
        return
    assert solve_exact(sc.with_routing_scale(hi)).total_cost >= a


def test_bound_is_admissible():
    sc = benchmark.toy6()
    trace = []
    solve_exact(sc, backend="python", trace=trace)
    feasible = []
    for x in itertools.product(range(4), repeat=sc.n_du):
        r = evaluate(sc, x)
        if r.feasible:
            feasible.append((x, r.total_cost))
    assert trace
    for prefix, lb in trace:
        best = min((c for x, c in feasible if all(x[i] == o for i, o in prefix.items())), default=math.inf)
        assert lb <= best + 1e-9


def test_canonical_agrees_between_backends():
    if compiled_backend is None:
        pytest.skip("extension not built")
    t = benchmark.standard().tables
    rng = np.random.Generator(np.random.PCG64(0))
    py, cy = get_backend("python"), get_backend("cython")
    args = (t.cost, t.cu_load, t.cap_cu, t.flow, t.path_ptr, t.path_links, t.link_cap)
    for _ in range(200):
        x = rng.integers(0, 4, t.n).astype(np.int64)
        assert py.canonical(x, *args) == cy.canonical(x, *args)
