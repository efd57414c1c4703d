"""Functional split placement for virtualized RANs: cost model, exact search and a learned policy."""
from .errors import VranError
from .kernels import BACKEND
from .model import (FAMILIES, N_SPLITS, EvalReport, Scenario, SplitOption, SystemParams, evaluate,
                    evaluate_batch, fixed_baseline_cost, penalization, split_flow)

__version__ = "0.1.0"

__all__ = ["BACKEND", "FAMILIES", "N_SPLITS", "EvalReport", "Scenario", "SplitOption", "SystemParams",
           "VranError", "evaluate", "evaluate_batch", "fixed_baseline_cost", "penalization", "split_flow",
           "__version__"]
