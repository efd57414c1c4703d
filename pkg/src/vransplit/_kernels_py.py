"""Pure-Python implementation of the search kernels.

Same signatures and results as the compiled ``_kernels`` module; selected
automatically when the extension is not built.

Conventions shared by both backends
-----------------------------------
* Canonical cost and loads are accumulated sequentially in DU index order.
  A leaf is accepted only after this canonical re-check, so both backends and
  :func:`vransplit.model.evaluate` agree bit for bit.
* Ties in cost go to the lexicographically smallest split vector.
* Pruning uses a small relative tolerance, so it never discards a leaf whose
  canonical cost equals the incumbent.
"""
from __future__ import annotations

import time

import numpy as np

BACKEND = "python"
_CHECK_EVERY = 1024


def _tol(x):
    return 1e-9 * max(1.0, abs(x))


def canonical(x, cost, cu_load, cap_cu, flow, path_ptr, path_links, link_cap):
    """Return ``(feasible, total_cost)`` of assignment ``x`` with DU-order sums."""
    n = len(x)
    total = 0.0
    cu = 0.0
    for i in range(n):
        total += cost[i, x[i]]
        cu += cu_load[i, x[i]]
    if cu > cap_cu:
        return False, total
    loads = [0.0] * len(link_cap)
    for i in range(n):
        f = flow[i, x[i]]
        for p in range(path_ptr[i], path_ptr[i + 1]):
            loads[path_links[p]] += f
    for e in range(len(link_cap)):
        if loads[e] > link_cap[e]:
            return False, total
    return True, total


def _lex_less(a, b):
    for u, v in zip(a, b):
        if u != v:
            return u < v
    return False


def bruteforce(cost, allowed, cu_load, cap_cu, flow, path_ptr, path_links, link_cap):
    """Enumerate every assignment built from allowed splits, in lexicographic order.

    Returns ``(assignment or None, cost, n_feasible)``.
    """
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0.0, 1
    options = [np.flatnonzero(allowed[i]) for i in range(n)]
    if any(o.size == 0 for o in options):
        return None, float("inf"), 0

    # outer loop over a prefix in Python, inner block of <= 8 DUs vectorized
    n_inner = min(n, 8)
    n_outer = n - n_inner
    inner = _grid(options[n_outer:])  # (M, n_inner) lexicographic

    best_x, best_c, n_feasible = None, float("inf"), 0
    link_cap = np.asarray(link_cap, dtype=float)
    for prefix in _lex_product(options[:n_outer]):
        m = inner.shape[0]
        total = np.zeros(m)
        cu = np.zeros(m)
        loads = np.zeros((m, link_cap.shape[0]))
        for i in range(n):
            if i < n_outer:
                o = prefix[i]
                total += cost[i, o]
                cu += cu_load[i, o]
                f = flow[i, o]
            else:
                o = inner[:, i - n_outer]
                total += cost[i, o]
                cu += cu_load[i, o]
                f = flow[i, o]
            for p in range(path_ptr[i], path_ptr[i + 1]):
                loads[:, path_links[p]] += f
        ok = (cu <= cap_cu) & np.all(loads <= link_cap[None, :], axis=1)
        n_feasible += int(ok.sum())
        if not ok.any():
            continue
        masked = np.where(ok, total, np.inf)
        k = int(np.argmin(masked))  # first minimum = lexicographically smallest
        if masked[k] < best_c:
            best_c = float(masked[k])
            best_x = np.array(list(prefix) + inner[k].tolist(), dtype=np.int64)
    return best_x, best_c, n_feasible


def _grid(options):
    if not options:
        return np.zeros((1, 0), dtype=np.int64)
    mesh = np.meshgrid(*options, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1).astype(np.int64)


def _lex_product(options):
    if not options:
        yield ()
        return
    idx = [0] * len(options)
    while True:
        yield tuple(int(options[i][idx[i]]) for i in range(len(options)))
        k = len(options) - 1
        while k >= 0:
            idx[k] += 1
            if idx[k] < len(options[k]):
                break
            idx[k] = 0
            k -= 1
        if k < 0:
            return


def bnb(cost, allowed, cu_load, cap_cu, flow, path_ptr, path_links, link_cap,
        order, incumbent, incumbent_cost, time_budget=-1.0, trace=None):
    """Depth-first branch and bound over DUs taken in ``order``.

    ``incumbent`` is an initial feasible assignment (empty array for none).
    A negative ``time_budget`` means unlimited. If ``trace`` is a list, one
    ``(prefix dict, lower bound)`` entry is appended per expanded node.

    Returns ``(assignment or None, cost, completed, nodes_expanded)``.
    """
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    order = [int(i) for i in order]
    n_links = len(link_cap)
    inf = float("inf")

    # per depth: allowed options sorted by (cost, index)
    choices = []
    for b in order:
        opts = [o for o in range(4) if allowed[b, o]]
        opts.sort(key=lambda o: (cost[b, o], o))
        choices.append(opts)
    if any(not c for c in choices):
        return None, inf, True, 0

    # suffix relaxations of the remaining DUs
    min_rest = [0.0] * (n + 1)
    min_cu_rest = [0.0] * (n + 1)
    min_link_rest = np.zeros((n + 1, n_links))
    for k in range(n - 1, -1, -1):
        b = order[k]
        min_rest[k] = min_rest[k + 1] + min(cost[b, o] for o in choices[k])
        min_cu_rest[k] = min_cu_rest[k + 1] + min(cu_load[b, o] for o in choices[k])
        min_link_rest[k] = min_link_rest[k + 1]
        fmin = min(flow[b, o] for o in choices[k])
        for p in range(path_ptr[b], path_ptr[b + 1]):
            min_link_rest[k, path_links[p]] += fmin

    best_x = np.asarray(incumbent, dtype=np.int64).copy() if len(incumbent) else None
    best_c = float(incumbent_cost) if best_x is not None else inf
    x = np.zeros(n, dtype=np.int64)
    loads = np.zeros(n_links)
    deadline = time.perf_counter() + time_budget if time_budget >= 0 else None
    state = {"nodes": 0, "timed_out": False}

    def visit(k, acc_cost, acc_cu):
        nonlocal best_x, best_c
        state["nodes"] += 1
        if deadline is not None and state["nodes"] % _CHECK_EVERY == 0:
            if time.perf_counter() > deadline:
                state["timed_out"] = True
        if state["timed_out"]:
            return
        if trace is not None:
            trace.append(({order[j]: int(x[order[j]]) for j in range(k)}, acc_cost + min_rest[k]))
        if k == n:
            ok, c = canonical(x, cost, cu_load, cap_cu, flow, path_ptr, path_links, link_cap)
            if ok and (c < best_c or (c == best_c and best_x is not None and _lex_less(x, best_x))):
                best_c, best_x = c, x.copy()
            return
        b = order[k]
        for o in choices[k]:
            nc = acc_cost + cost[b, o]
            if nc + min_rest[k + 1] > best_c + _tol(best_c):
                break
            ncu = acc_cu + cu_load[b, o]
            if ncu + min_cu_rest[k + 1] > cap_cu + _tol(cap_cu):
                continue
            f = flow[b, o]
            fits = True
            for p in range(path_ptr[b], path_ptr[b + 1]):
                e = path_links[p]
                if loads[e] + f + min_link_rest[k + 1, e] > link_cap[e] + _tol(link_cap[e]):
                    fits = False
                    break
            if not fits:
                continue
            links = path_links[path_ptr[b]:path_ptr[b + 1]]
            saved = loads[links].copy()
            loads[links] += f
            x[b] = o
            visit(k + 1, nc, ncu)
            loads[links] = saved
            if state["timed_out"]:
                return

    visit(0, 0.0, 0.0)
    return best_x, best_c, not state["timed_out"], state["nodes"]
