"""Built-in scenarios used by the experiments and the test suite.

``standard`` is a 10-DU Waxman network at 150 Mbps per BS whose CU capacity
is the binding constraint: the per-BS cheapest split vector overloads the CU,
while D-RAN stays feasible. ``toy6`` and ``toy8`` are smaller instances of the
same family. ``timing30`` has 30 DUs with heterogeneous loads and a CU sized
to hold only part of the fully centralized load, which turns the exact search
into a genuine knapsack.
"""
from __future__ import annotations

import numpy as np

from .model import Scenario, SystemParams
from .topology import WaxmanConfig, generate_waxman

# shared link ranges for the small benchmarks
_SMALL = dict(n_router=5, area=60.0, capacity_range=(3000.0, 20000.0), link_cost_range=(1e-5, 1e-4))


def standard() -> Scenario:
    topo = generate_waxman(WaxmanConfig(n_du=10, seed=0, **_SMALL))
    return Scenario(topo, (150.0,) * 10, SystemParams(cap_cu=20.0))


def toy6() -> Scenario:
    topo = generate_waxman(WaxmanConfig(n_du=6, seed=1, **_SMALL))
    return Scenario(topo, (150.0,) * 6, SystemParams(cap_cu=12.0))


def toy8() -> Scenario:
    topo = generate_waxman(WaxmanConfig(n_du=8, seed=8, **_SMALL))
    return Scenario(topo, (150.0,) * 8, SystemParams(cap_cu=16.0))


def timing30() -> Scenario:
    n, seed = 30, 8
    rng = np.random.Generator(np.random.PCG64(seed))
    traffic = tuple(float(round(v, 1)) for v in rng.uniform(10.0, 150.0, n))
    cap_cu = max(7.5, 0.3 * 0.05 * sum(traffic))  # 30% of the all-S3 CU load
    topo = generate_waxman(WaxmanConfig(n_du=n, n_router=8, area=40.0, capacity_range=(20000.0, 100000.0),
                                        link_cost_range=(1e-6, 1e-5), seed=seed))
    return Scenario(topo, traffic, SystemParams(cap_cu=cap_cu))


_BUILDERS = {"standard": standard, "toy6": toy6, "toy8": toy8, "timing30": timing30}
NAMES = tuple(_BUILDERS)


def named(name: str) -> Scenario:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; choose from {', '.join(NAMES)}") from None


def random_scenario(rng: np.random.Generator, max_du: int = 10) -> Scenario:
    """Random Waxman network with 1..``max_du`` DUs and per-BS loads in [10, 150] Mbps."""
    n = int(rng.integers(1, max_du + 1))
    cfg = WaxmanConfig(n_du=n, n_router=int(rng.integers(0, 6)), area=float(rng.uniform(20.0, 300.0)),
                       capacity_range=(1000.0, 50000.0), link_cost_range=(1e-5, 1e-3),
                       seed=int(rng.integers(2**31)))
    traffic = tuple(float(v) for v in rng.uniform(10.0, 150.0, n))
    cap_cu = float(rng.uniform(7.5, 7.5 * n + 7.5))
    return Scenario(generate_waxman(cfg), traffic, SystemParams(cap_cu=cap_cu))
