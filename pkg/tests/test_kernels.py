import os
import subprocess
import sys

import pytest

from vransplit import benchmark
from vransplit.exact import solve_bruteforce, solve_exact
from vransplit.kernels import compiled_backend, get_backend


def test_pure_python_switch():
    env = dict(os.environ, VRANSPLIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from vransplit.kernels import BACKEND; print(BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_compiled_is_default_when_built():
    if compiled_backend is None or os.environ.get("VRANSPLIT_PURE_PYTHON"):
        pytest.skip("compiled backend not active")
    assert get_backend().BACKEND == "cython"


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("fortran")


@pytest.mark.skipif(compiled_backend is None, reason="extension not built")
@pytest.mark.parametrize("name", ["toy6", "toy8"])
def test_backends_agree(name):
    sc = benchmark.named(name)
    py, cy = solve_bruteforce(sc, backend="python"), solve_bruteforce(sc, backend="cython")
    assert py.assignment == cy.assignment and py.total_cost == cy.total_cost
    a, b = solve_exact(sc, backend="python"), solve_exact(sc, backend="cython")
    assert a.assignment == b.assignment == py.assignment
    assert a.nodes == b.nodes
