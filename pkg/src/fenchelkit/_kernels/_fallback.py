"""Pure-numpy implementations of the numerical hot loops.

Drop-in twins of the compiled routines in ``_core``; the active backend is
chosen in ``fenchelkit._kernels``.  Both backends must agree bit-for-bit on
the same inputs (the test suite checks parity on random data), so every
floating-point operation here is elementwise or a plain min/max reduction.
"""

import heapq

import numpy as np

# Simplex status codes shared by both backends.
SIMPLEX_OPTIMAL = 0
SIMPLEX_UNBOUNDED = 2
SIMPLEX_PIVOT_LIMIT = 3


def lower_hull(xs, ys):
    """Indices of the lower convex hull vertices of the points (xs, ys).

    xs must be strictly increasing and all values finite.  Collinear interior
    points are dropped, so consecutive hull slopes are strictly increasing.
    """
    n = xs.shape[0]
    if n <= 2:
        return np.arange(n, dtype=np.int64)
    stack = [0, 1]
    for k in range(2, n):
        while len(stack) >= 2:
            i = stack[-2]
            j = stack[-1]
            cross = (xs[j] - xs[i]) * (ys[k] - ys[i]) - (ys[j] - ys[i]) * (xs[k] - xs[i])
            if cross <= 0.0:
                stack.pop()
            else:
                break
        stack.append(k)
    return np.asarray(stack, dtype=np.int64)


def legendre_transform(hx, hy, q):
    """max_i (hx[i] * q[k] - hy[i]) for each dual node q[k], q ascending.

    hx, hy are lower-hull vertices (hx increasing, slopes strictly
    increasing), so the argmax index is nondecreasing in q and a single
    forward pointer covers all dual nodes: the sorted-slope merge.  The
    strict comparison keeps the smallest attaining index on ties.
    """
    n = hx.shape[0]
    out = np.empty(q.shape[0])
    i = 0
    for k in range(q.shape[0]):
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
    return out


def minplus_convolve(a, b):
    """Min-plus convolution out[k] = min_{i+j=k} a[i] + b[j].

    Entries may be +inf (never -inf / NaN).  Returns (out, left_index) where
    left_index[k] is the smallest attaining i, or -1 when out[k] is +inf.
    """
    n = a.shape[0]
    m = b.shape[0]
    out = np.empty(n + m - 1)
    left = np.empty(n + m - 1, dtype=np.int64)
    for k in range(n + m - 1):
        i0 = max(0, k - m + 1)
        i1 = min(n - 1, k)
        seg = a[i0 : i1 + 1] + b[k - i1 : k - i0 + 1][::-1]
        pos = int(np.argmin(seg))
        v = seg[pos]
        if np.isinf(v):
            out[k] = np.inf
            left[k] = -1
        else:
            out[k] = v
            left[k] = i0 + pos
    return out, left


def simplex_pivot_loop(T, basis, ncols_enter, eps, max_iter):
    """Bland-rule simplex pivoting on a dense tableau, in place.

    T has shape (m+1, N+1): m constraint rows, objective row last, rhs column
    last.  basis[i] is the column basic in row i.  Only columns < ncols_enter
    may enter (lets callers fence off artificial columns).  Returns
    (status, iterations).
    """
    m = T.shape[0] - 1
    ncols = T.shape[1] - 1
    it = 0
    while True:
        row = T[m, :ncols_enter]
        neg = np.nonzero(row < -eps)[0]
        if neg.size == 0:
            return SIMPLEX_OPTIMAL, it
        if it >= max_iter:
            return SIMPLEX_PIVOT_LIMIT, it
        j = int(neg[0])
        col = T[:m, j]
        pos = col > eps
        if not pos.any():
            return SIMPLEX_UNBOUNDED, it
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, ncols][pos] / col[pos]
        rmin = ratios.min()
        cand = np.nonzero(ratios == rmin)[0]
        i = int(cand[np.argmin(basis[cand])])
        piv = T[i, j]
        T[i, :] /= piv
        factors = T[:, j].copy()
        factors[i] = 0.0
        T -= np.outer(factors, T[i, :])
        T[:, j] = 0.0
        T[i, j] = 1.0
        basis[i] = j
        it += 1


def dijkstra_grid(passable, nx, ny, axis_w, diag_w, sources):
    """Shortest path distances on a masked rectangular grid.

    passable is a flat uint8 array (node (i, j) at index i * ny + j); axis
    moves cost axis_w, diagonal moves cost diag_w (skipped when diag_w <= 0).
    sources is an int64 array of start nodes.  Returns flat float distances,
    +inf where unreachable or blocked.  Heap ties break on node index so the
    settle order is deterministic.
    """
    dist = np.full(nx * ny, np.inf)
    heap = []
    for s in sources:
        s = int(s)
        if passable[s] and dist[s] > 0.0:
            dist[s] = 0.0
            heapq.heappush(heap, (0.0, s))
    steps = [(-1, 0, axis_w), (1, 0, axis_w), (0, -1, axis_w), (0, 1, axis_w)]
    if diag_w > 0.0:
        steps += [(-1, -1, diag_w), (-1, 1, diag_w), (1, -1, diag_w), (1, 1, diag_w)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        ui, uj = divmod(u, ny)
        for di, dj, w in steps:
            vi = ui + di
            vj = uj + dj
            if vi < 0 or vi >= nx or vj < 0 or vj >= ny:
                continue
            v = vi * ny + vj
            if not passable[v]:
                continue
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist
