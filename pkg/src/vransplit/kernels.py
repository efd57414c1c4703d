"""Backend selection for the search kernels.

The compiled extension is used when it imports; otherwise, or when the
``VRANSPLIT_PURE_PYTHON`` environment variable is set to a non-empty value,
the pure-Python twin is used. Both expose ``bruteforce``, ``bnb`` and
``canonical`` with identical results.
"""
import os

from . import _kernels_py as python_backend

compiled_backend = None
try:
    from . import _kernels as compiled_backend
except ImportError:  # extension not built
    pass

if compiled_backend is not None and not os.environ.get("VRANSPLIT_PURE_PYTHON"):
    backend = compiled_backend
else:
    backend = python_backend

BACKEND = backend.BACKEND


def get_backend(name=None):
    """Return a backend module by name (``"python"``/``"cython"``) or the active one."""
    if name is None:
        return backend
    if name == "python":
        return python_backend
    if name == "cython":
        if compiled_backend is None:
            raise ImportError("the compiled kernel extension is not built")
        return compiled_backend
    raise ValueError(f"unknown backend {name!r}")
