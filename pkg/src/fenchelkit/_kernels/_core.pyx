# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the pure-numpy kernels in ``_fallback``.

Every routine performs the same floating-point operations in the same order
as its fallback twin, so results agree bit-for-bit.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

SIMPLEX_OPTIMAL = 0
SIMPLEX_UNBOUNDED = 2
SIMPLEX_PIVOT_LIMIT = 3


def lower_hull(const double[::1] xs, const double[::1] ys):
    cdef Py_ssize_t n = xs.shape[0]
    if n <= 2:
        return np.arange(n, dtype=np.int64)
    stack_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] stack = stack_arr
    cdef Py_ssize_t top = 2
    cdef Py_ssize_t k, i, j
    cdef double cross
    stack[0] = 0
    stack[1] = 1
    for k in range(2, n):
        while top >= 2:
            i = stack[top - 2]
            j = stack[top - 1]
            cross = (xs[j] - xs[i]) * (ys[k] - ys[i]) - (ys[j] - ys[i]) * (xs[k] - xs[i])
            if cross <= 0.0:
                top -= 1
            else:
                break
        stack[top] = k
        top += 1
    return stack_arr[:top].copy()


def legendre_transform(const double[::1] hx, const double[::1] hy, const double[::1] q):
    cdef Py_ssize_t n = hx.shape[0]
    cdef Py_ssize_t m = q.shape[0]
    out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i = 0, k
    cdef double qk, best, nxt
    for k in range(m):
        qk = q[k]
        best = hx[i] * qk - hy[i]
        while i + 1 < n:
            nxt = hx[i + 1] * qk - hy[i + 1]
            if nxt > best:
                i += 1
                best = nxt
            else:
                break
        out[k] = best
    return out_arr


def minplus_convolve(const double[::1] a, const double[::1] b):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    cdef double INF = np.inf
    out_arr = np.empty(n + m - 1)
    left_arr = np.empty(n + m - 1, dtype=np.int64)
    cdef double[::1] out = out_arr
    cdef long long[::1] left = left_arr
    cdef Py_ssize_t k, i, i0, i1, pos
    cdef double v, cand
    for k in range(n + m - 1):
        i0 = k - m + 1 if k - m + 1 > 0 else 0
        i1 = n - 1 if n - 1 < k else k
        v = INF
        pos = -1
        for i in range(i0, i1 + 1):
            cand = a[i] + b[k - i]
            if cand < v:
                v = cand
                pos = i
        if v == INF:
            out[k] = INF
            left[k] = -1
        else:
            out[k] = v
            left[k] = pos
    return out_arr, left_arr


def simplex_pivot_loop(double[:, ::1] T, long long[::1] basis, Py_ssize_t ncols_enter, double eps, long long max_iter):
    cdef Py_ssize_t m = T.shape[0] - 1
    cdef Py_ssize_t ncols = T.shape[1] - 1
    cdef long long it = 0
    cdef Py_ssize_t i, j, k, c, besti
    cdef double piv, ratio, rmin, factor
    while True:
        j = -1
        for c in range(ncols_enter):
            if T[m, c] < -eps:
                j = c
                break
        if j < 0:
            return SIMPLEX_OPTIMAL, it
        if it >= max_iter:
            return SIMPLEX_PIVOT_LIMIT, it
        rmin = np.inf
        for i in range(m):
            if T[i, j] > eps:
                ratio = T[i, ncols] / T[i, j]
                if ratio < rmin:
                    rmin = ratio
        if rmin == np.inf:
            return SIMPLEX_UNBOUNDED, it
        besti = -1
        for i in range(m):
            if T[i, j] > eps:
                ratio = T[i, ncols] / T[i, j]
                if ratio == rmin:
                    if besti < 0 or basis[i] < basis[besti]:
                        besti = i
        i = besti
        piv = T[i, j]
        for c in range(ncols + 1):
            T[i, c] /= piv
        for k in range(m + 1):
            if k == i:
                continue
            factor = T[k, j]
            if factor != 0.0:
                for c in range(ncols + 1):
                    T[k, c] -= factor * T[i, c]
        for k in range(m + 1):
            T[k, j] = 0.0
        T[i, j] = 1.0
        basis[i] = j
        it += 1


cdef inline void _heap_push(double* hd, long long* hn, Py_ssize_t* size, double d, long long node):
    cdef Py_ssize_t i = size[0]
    cdef Py_ssize_t parent
    hd[i] = d
    hn[i] = node
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if hd[i] < hd[parent] or (hd[i] == hd[parent] and hn[i] < hn[parent]):
            hd[i], hd[parent] = hd[parent], hd[i]
            hn[i], hn[parent] = hn[parent], hn[i]
            i = parent
        else:
            break


cdef inline void _heap_pop(double* hd, long long* hn, Py_ssize_t* size):
    cdef Py_ssize_t i = 0, child
    cdef Py_ssize_t n = size[0] - 1
    hd[0] = hd[n]
    hn[0] = hn[n]
    size[0] = n
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and (hd[child + 1] < hd[child] or (hd[child + 1] == hd[child] and hn[child + 1] < hn[child])):
            child += 1
        if hd[child] < hd[i] or (hd[child] == hd[i] and hn[child] < hn[i]):
            hd[i], hd[child] = hd[child], hd[i]
            hn[i], hn[child] = hn[child], hn[i]
            i = child
        else:
            break


def dijkstra_grid(const cnp.uint8_t[::1] passable, Py_ssize_t nx, Py_ssize_t ny, double axis_w, double diag_w, const long long[::1] sources):
    cdef Py_ssize_t total = nx * ny
    dist_arr = np.full(total, np.inf)
    cdef double[::1] dist = dist_arr
    # 8 neighbours max per node; heap can hold one stale entry per push
    cap_arr_d = np.empty(8 * total + max(total, 16), dtype=np.float64)
    cap_arr_n = np.empty(8 * total + max(total, 16), dtype=np.int64)
    cdef double[::1] hd = cap_arr_d
    cdef long long[::1] hn = cap_arr_n
    cdef Py_ssize_t size = 0
    cdef Py_ssize_t s_i, ui, uj, vi, vj, step
    cdef long long u, v, s
    cdef double d, nd
    cdef int nsteps = 4
    cdef long long[8] di
    cdef long long[8] dj
    cdef double[8] w
    di[0] = -1; dj[0] = 0; w[0] = axis_w
    di[1] = 1; dj[1] = 0; w[1] = axis_w
    di[2] = 0; dj[2] = -1; w[2] = axis_w
    di[3] = 0; dj[3] = 1; w[3] = axis_w
    if diag_w > 0.0:
        di[4] = -1; dj[4] = -1; w[4] = diag_w
        di[5] = -1; dj[5] = 1; w[5] = diag_w
        di[6] = 1; dj[6] = -1; w[6] = diag_w
        di[7] = 1; dj[7] = 1; w[7] = diag_w
        nsteps = 8
    for s_i in range(sources.shape[0]):
        s = sources[s_i]
        if passable[s] and dist[s] > 0.0:
            dist[s] = 0.0
            _heap_push(&hd[0], &hn[0], &size, 0.0, s)
    while size > 0:
        d = hd[0]
        u = hn[0]
        _heap_pop(&hd[0], &hn[0], &size)
        if d > dist[u]:
            continue
        ui = u // ny
        uj = u % ny
        for step in range(nsteps):
            vi = ui + di[step]
            vj = uj + dj[step]
            if vi < 0 or vi >= nx or vj < 0 or vj >= ny:
                continue
            v = vi * ny + vj
            if not passable[v]:
                continue
            nd = d + w[step]
            if nd < dist[v]:
                dist[v] = nd
                _heap_push(&hd[0], &hn[0], &size, nd, v)
    return dist_arr
