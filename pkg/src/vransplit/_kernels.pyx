# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled search kernels. Mirrors ``_kernels_py`` exactly (see its docstring)."""
import time

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"
cdef enum:
    CHECK_EVERY = 4096
    NSPLIT = 4


cdef inline double _tol(double x) noexcept nogil:
    if x < 0:
        x = -x
    return 1e-9 * (x if x > 1.0 else 1.0)


cdef bint _canonical(const cnp.int64_t[::1] x, const double[:, ::1] cost,
                     const double[:, ::1] cu_load, double cap_cu, const double[:, ::1] flow,
                     const cnp.int64_t[::1] path_ptr, const cnp.int64_t[::1] path_links,
                     const double[::1] link_cap, double[::1] loads, double* out_cost) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0], i, p, e
    cdef double total = 0.0, cu = 0.0, f
    for i in range(n):
        total += cost[i, x[i]]
        cu += cu_load[i, x[i]]
    out_cost[0] = total
    if cu > cap_cu:
        return False
    for e in range(link_cap.shape[0]):
        loads[e] = 0.0
    for i in range(n):
        f = flow[i, x[i]]
        for p in range(path_ptr[i], path_ptr[i + 1]):
            loads[path_links[p]] += f
    for e in range(link_cap.shape[0]):
        if loads[e] > link_cap[e]:
            return False
    return True


def canonical(x, cost, cu_load, double cap_cu, flow, path_ptr, path_links, link_cap):
    cdef double c
    loads = np.zeros(len(link_cap))
    ok = _canonical(np.ascontiguousarray(x, dtype=np.int64), np.ascontiguousarray(cost, dtype=float),
                    np.ascontiguousarray(cu_load, dtype=float), cap_cu,
                    np.ascontiguousarray(flow, dtype=float),
                    np.ascontiguousarray(path_ptr, dtype=np.int64),
                    np.ascontiguousarray(path_links, dtype=np.int64),
                    np.ascontiguousarray(link_cap, dtype=float), loads, &c)
    return bool(ok), c


def bruteforce(cost_, allowed_, cu_load_, double cap_cu, flow_, path_ptr_, path_links_, link_cap_):
    """Lexicographic enumeration of all allowed assignments. See ``_kernels_py.bruteforce``."""
    cdef const double[:, ::1] cost = np.ascontiguousarray(cost_, dtype=float)
    cdef const cnp.uint8_t[:, ::1] allowed = np.ascontiguousarray(allowed_, dtype=np.uint8)
    cdef const double[:, ::1] cu_load = np.ascontiguousarray(cu_load_, dtype=float)
    cdef const double[:, ::1] flow = np.ascontiguousarray(flow_, dtype=float)
    cdef const cnp.int64_t[::1] path_ptr = np.ascontiguousarray(path_ptr_, dtype=np.int64)
    cdef const cnp.int64_t[::1] path_links = np.ascontiguousarray(path_links_, dtype=np.int64)
    cdef const double[::1] link_cap = np.ascontiguousarray(link_cap_, dtype=float)
    cdef Py_ssize_t n = cost.shape[0], n_links = link_cap.shape[0]
    cdef Py_ssize_t i, k, e, p
    cdef long long n_feasible = 0
    cdef double total, cu, f, best_c = np.inf
    cdef bint ok, have_best = False

    if n == 0:
        return np.zeros(0, dtype=np.int64), 0.0, 1

    opts_arr = np.full((n, NSPLIT), -1, dtype=np.int64)
    nopt_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] opts = opts_arr
    cdef cnp.int64_t[::1] nopt = nopt_arr
    for i in range(n):
        for k in range(NSPLIT):
            if allowed[i, k]:
                opts[i, nopt[i]] = k
                nopt[i] += 1
        if nopt[i] == 0:
            return None, float("inf"), 0

    idx_arr = np.zeros(n, dtype=np.int64)
    x_arr = np.zeros(n, dtype=np.int64)
    best_arr = np.zeros(n, dtype=np.int64)
    pre_cost_arr = np.zeros(n + 1)
    pre_cu_arr = np.zeros(n + 1)
    loads_arr = np.zeros(n_links)
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef cnp.int64_t[::1] x = x_arr
    cdef cnp.int64_t[::1] best = best_arr
    cdef double[::1] pre_cost = pre_cost_arr
    cdef double[::1] pre_cu = pre_cu_arr
    cdef double[::1] loads = loads_arr
    cdef Py_ssize_t start = 0

    with nogil:
        while True:
            # refresh prefix sums from position `start` (sequential DU order)
            for i in range(start, n):
                x[i] = opts[i, idx[i]]
                pre_cost[i + 1] = pre_cost[i] + cost[i, x[i]]
                pre_cu[i + 1] = pre_cu[i] + cu_load[i, x[i]]
            total = pre_cost[n]
            ok = pre_cu[n] <= cap_cu
            if ok:
                for e in range(n_links):
                    loads[e] = 0.0
                for i in range(n):
                    f = flow[i, x[i]]
                    for p in range(path_ptr[i], path_ptr[i + 1]):
                        loads[path_links[p]] += f
                for e in range(n_links):
                    if loads[e] > link_cap[e]:
                        ok = False
                        break
            if ok:
                n_feasible += 1
                if total < best_c:
                    best_c = total
                    have_best = True
                    for i in range(n):
                        best[i] = x[i]
            # odometer increment, last DU fastest
            k = n - 1
            while k >= 0:
                idx[k] += 1
                if idx[k] < nopt[k]:
                    break
                idx[k] = 0
                k -= 1
            if k < 0:
                break
            start = k
    if not have_best:
        return None, float("inf"), n_feasible
    return best_arr, best_c, n_feasible


cdef class _Search:
    cdef const double[:, ::1] cost
    cdef const double[:, ::1] cu_load
    cdef const double[:, ::1] flow
    cdef const cnp.int64_t[::1] path_ptr
    cdef const cnp.int64_t[::1] path_links
    cdef const double[::1] link_cap
    cdef cnp.int64_t[::1] order
    cdef cnp.int64_t[:, ::1] choices
    cdef cnp.int64_t[::1] nchoice
    cdef double[::1] min_rest
    cdef double[::1] min_cu_rest
    cdef double[:, ::1] min_link_rest
    cdef cnp.int64_t[::1] x
    cdef cnp.int64_t[::1] best
    cdef double[::1] loads
    cdef double[::1] scratch
    cdef double[:, ::1] saved
    cdef double cap_cu, best_c, deadline
    cdef bint have_best, timed_out, use_deadline
    cdef long long nodes
    cdef Py_ssize_t n

    cdef void leaf(self):
        cdef double c
        cdef Py_ssize_t i
        cdef bint better
        if not _canonical(self.x, self.cost, self.cu_load, self.cap_cu, self.flow, self.path_ptr,
                          self.path_links, self.link_cap, self.scratch, &c):
            return
        better = c < self.best_c
        if not better and c == self.best_c and self.have_best:
            for i in range(self.n):
                if self.x[i] != self.best[i]:
                    better = self.x[i] < self.best[i]
                    break
        if better:
            self.best_c = c
            self.have_best = True
            for i in range(self.n):
                self.best[i] = self.x[i]

    cdef void visit(self, Py_ssize_t k, double acc_cost, double acc_cu):
        cdef Py_ssize_t j, b, o, p, e, p0, p1
        cdef double nc, ncu, f
        cdef bint fits
        self.nodes += 1
        if self.use_deadline and self.nodes % CHECK_EVERY == 0:
            if time.perf_counter() > self.deadline:
                self.timed_out = True
        if self.timed_out:
            return
        if k == self.n:
            self.leaf()
            return
        b = self.order[k]
        p0 = self.path_ptr[b]
        p1 = self.path_ptr[b + 1]
        for j in range(self.nchoice[k]):
            o = self.choices[k, j]
            nc = acc_cost + self.cost[b, o]
            if nc + self.min_rest[k + 1] > self.best_c + _tol(self.best_c):
                break
            ncu = acc_cu + self.cu_load[b, o]
            if ncu + self.min_cu_rest[k + 1] > self.cap_cu + _tol(self.cap_cu):
                continue
            f = self.flow[b, o]
            fits = True
            for p in range(p0, p1):
                e = self.path_links[p]
                if self.loads[e] + f + self.min_link_rest[k + 1, e] > self.link_cap[e] + _tol(self.link_cap[e]):
                    fits = False
                    break
            if not fits:
                continue
            for p in range(p0, p1):
                e = self.path_links[p]
                self.saved[k, p - p0] = self.loads[e]
                self.loads[e] += f
            self.x[b] = o
            self.visit(k + 1, nc, ncu)
            for p in range(p0, p1):
                self.loads[self.path_links[p]] = self.saved[k, p - p0]
            if self.timed_out:
                return


def bnb(cost, allowed, cu_load, double cap_cu, flow, path_ptr, path_links, link_cap,
        order, incumbent, double incumbent_cost, double time_budget=-1.0, trace=None):
    """Depth-first branch and bound. See ``_kernels_py.bnb``; ``trace`` is not supported."""
    if trace is not None:
        raise NotImplementedError("tracing is only available in the Python backend")
    cdef _Search s = _Search.__new__(_Search)
    cdef Py_ssize_t n, k, b, p, o, j, n_links
    cost = np.ascontiguousarray(cost, dtype=float)
    allowed = np.asarray(allowed, dtype=bool)
    s.cost = cost
    s.cu_load = np.ascontiguousarray(cu_load, dtype=float)
    s.flow = np.ascontiguousarray(flow, dtype=float)
    s.path_ptr = np.ascontiguousarray(path_ptr, dtype=np.int64)
    s.path_links = np.ascontiguousarray(path_links, dtype=np.int64)
    s.link_cap = np.ascontiguousarray(link_cap, dtype=float)
    s.cap_cu = cap_cu
    n = cost.shape[0]
    n_links = s.link_cap.shape[0]
    s.n = n
    s.order = np.ascontiguousarray(order, dtype=np.int64)

    choices = np.full((n, NSPLIT), -1, dtype=np.int64)
    nchoice = np.zeros(n, dtype=np.int64)
    for k in range(n):
        b = s.order[k]
        opts = sorted((o for o in range(NSPLIT) if allowed[b, o]), key=lambda o: (cost[b, o], o))
        if not opts:
            return None, float("inf"), True, 0
        choices[k, :len(opts)] = opts
        nchoice[k] = len(opts)
    s.choices = choices
    s.nchoice = nchoice

    min_rest = np.zeros(n + 1)
    min_cu_rest = np.zeros(n + 1)
    min_link_rest = np.zeros((n + 1, n_links))
    flow_np = np.asarray(flow, dtype=float)
    cu_np = np.asarray(cu_load, dtype=float)
    for k in range(n - 1, -1, -1):
        b = s.order[k]
        opts = choices[k, :nchoice[k]]
        min_rest[k] = min_rest[k + 1] + min(cost[b, o] for o in opts)
        min_cu_rest[k] = min_cu_rest[k + 1] + min(cu_np[b, o] for o in opts)
        min_link_rest[k] = min_link_rest[k + 1]
        fmin = min(flow_np[b, o] for o in opts)
        for p in range(s.path_ptr[b], s.path_ptr[b + 1]):
            min_link_rest[k, s.path_links[p]] += fmin
    s.min_rest = min_rest
    s.min_cu_rest = min_cu_rest
    s.min_link_rest = min_link_rest

    max_len = int(np.max(np.diff(np.asarray(path_ptr)))) if n else 0
    s.saved = np.zeros((n + 1, max(max_len, 1)))
    s.x = np.zeros(n, dtype=np.int64)
    best = np.zeros(n, dtype=np.int64)
    s.best = best
    s.loads = np.zeros(n_links)
    s.scratch = np.zeros(n_links)
    if len(incumbent):
        best[:] = incumbent
        s.best_c = incumbent_cost
        s.have_best = True
    else:
        s.best_c = np.inf
        s.have_best = False
    s.timed_out = False
    s.nodes = 0
    s.use_deadline = time_budget >= 0
    s.deadline = time.perf_counter() + time_budget if time_budget >= 0 else 0.0

    s.visit(0, 0.0, 0.0)
    if not s.have_best:
        return None, float("inf"), not s.timed_out, s.nodes
    return best, s.best_c, not s.timed_out, s.nodes
