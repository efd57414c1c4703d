"""Test-time decoding over one or more trained policies.

Every model decodes the scenario (greedy, or greedy plus ``S`` samples at a
softened temperature); all candidates are pooled and the cheapest feasible
split vector wins. If nothing is feasible the lowest penalized cost is
returned with ``feasible=False``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NegativeGap
from .model import EvalReport, Scenario, evaluate, evaluate_batch
from .nn.autodiff import no_grad
from .nn.layers import ParamSet, policy_forward, scenario_features
from .train import load_policy, penalized, unpermute

DEFAULT_TEMPERATURE = 15.0
DEFAULT_SAMPLES = 16


@dataclass(frozen=True)
class InferenceResult:
    assignment: tuple
    report: EvalReport
    candidates: int

    @property
    def total_cost(self) -> float:
        return self.report.total_cost

    @property
    def feasible(self) -> bool:
        return self.report.feasible


def load_models(models) -> list:
    """Accept checkpoint paths or already-loaded :class:`ParamSet` objects."""
    out = []
    for m in models:
        out.append(m if isinstance(m, ParamSet) else load_policy(Path(m)))
    if not out:
        raise ValueError("at least one model is required")
    return out


def _features(scenario: Scenario, order):
    base = scenario_features(scenario)
    if order is None:
        return base[None], np.arange(scenario.n_du)[None]
    perm = np.asarray(order, dtype=np.int64)
    return base[perm][None], perm[None]


def _pick(scenario: Scenario, cands: np.ndarray, mu=1.0) -> InferenceResult:
    cands = np.unique(cands, axis=0)  # lexicographically sorted rows
    ev = evaluate_batch(scenario.tables, cands)
    if ev.feasible.any():
        score = np.where(ev.feasible, ev.total_cost, np.inf)
    else:
        score = penalized(ev.total_cost, ev.violations, np.broadcast_to(np.asarray(mu, float), (4,)))[1]
    k = int(np.argmin(score))  # first minimum = lexicographically smallest
    x = tuple(int(v) for v in cands[k])
    return InferenceResult(x, evaluate(scenario, x), len(cands))


def _greedy_candidates(models, feats, perms):
    rows = []
    for ps in models:
        out = policy_forward(ps, feats, "greedy")
        rows.append(unpermute(out.actions, perms))
    return np.concatenate(rows, axis=0)


def infer_greedy(models, scenario: Scenario, order=None) -> InferenceResult:
    """Greedy decode of every model; ``order`` optionally fixes the BS presentation order."""
    models = load_models(models)
    feats, perms = _features(scenario, order)
    with no_grad():
        cands = _greedy_candidates(models, feats, perms)
    return _pick(scenario, cands)


def infer_temperature(models, scenario: Scenario, T: float = DEFAULT_TEMPERATURE,
                      samples: int = DEFAULT_SAMPLES, seed: int = 0, order=None,
                      rng: np.random.Generator | None = None) -> InferenceResult:
    """Pool each model's greedy decode with ``samples`` draws at temperature ``T``."""
    if T <= 0:
        raise ValueError("temperature must be positive")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    models = load_models(models)
    rng = rng or np.random.Generator(np.random.PCG64(seed))
    feats, perms = _features(scenario, order)
    many = np.repeat(feats, samples, axis=0)
    many_perms = np.repeat(perms, samples, axis=0)
    with no_grad():
        rows = [_greedy_candidates(models, feats, perms)]
        for ps in models:
            out = policy_forward(ps, many, "sample", T, rng)
            rows.append(unpermute(out.actions, many_perms))
    return _pick(scenario, np.concatenate(rows, axis=0))


def optimality_gap(candidate, reference) -> float:
    """Percentage excess of ``candidate`` cost over the optimal ``reference`` cost."""
    j = candidate.total_cost
    j_opt = reference.total_cost
    gap = 100.0 * (j - j_opt) / j_opt if j_opt != 0 else (0.0 if j == 0 else float("inf"))
    if gap < 0:
        raise NegativeGap(f"candidate cost {j!r} is below the reference optimum {j_opt!r}")
    return gap
