import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from vransplit.model import Link, Node, Scenario, SystemParams  # noqa: E402
from vransplit.topology import build_topology  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def star(lengths, caps=None, costs=None, traffic=150.0, params=None):
    """CU at the hub, one DU per spoke."""
    n = len(lengths)
    caps = caps or [50000.0] * n
    costs = costs or [1e-5] * n
    nodes = [Node(0, "CU")] + [Node(i + 1, "DU") for i in range(n)]
    links = [Link(0, i + 1, float(caps[i]), float(costs[i]), float(lengths[i])) for i in range(n)]
    lam = traffic if isinstance(traffic, (list, tuple)) else [traffic] * n
    return Scenario(build_topology(nodes, links), tuple(lam), params or SystemParams())


@pytest.fixture
def star_factory():
    return star


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))


# one summary line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k[2:])):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
