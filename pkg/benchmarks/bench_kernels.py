"""Timing comparison of the compiled kernels against the pure-Python fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeats 5]

Each kernel is timed on a fixed synthetic workload; the table reports the
median wall time per backend and the speedup.  When the extension is not
built only the fallback column is filled in.
"""

import argparse
import time

import numpy as np

from fenchelkit._kernels import _fallback

try:
    from fenchelkit._kernels import _core
except ImportError:
    _core = None


def median_time(fn, repeats):
    ts = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return float(np.median(ts))


def workloads():
    # independent stream per workload so edits to one leave the others alone
    rng = np.random.RandomState(12)

    xs = np.linspace(-3.0, 3.0, 200_000)
    ys = xs**2 + rng.uniform(0.0, 0.5, size=xs.size)
    yield "lower_hull (200k nodes)", lambda mod: mod.lower_hull(xs, ys)

    hx = np.linspace(-3.0, 3.0, 50_000)
    hy = hx**2
    q = np.linspace(-6.0, 6.0, 50_000)
    yield "legendre_transform (50k x 50k)", lambda mod: mod.legendre_transform(hx, hy, q)

    rng = np.random.RandomState(13)
    a = rng.uniform(0.0, 1.0, size=4000)
    b = rng.uniform(0.0, 1.0, size=4000)
    a[rng.randint(0, 4000, size=50)] = np.inf
    yield "minplus_convolve (4k x 4k)", lambda mod: mod.minplus_convolve(a, b)

    rng = np.random.RandomState(14)
    m = n = 80
    A = rng.uniform(0.1, 1.0, size=(m, n))
    bvec = A @ rng.uniform(0.0, 1.0, size=n) + rng.uniform(0.1, 1.0, size=m)
    c = rng.uniform(-1.0, 1.0, size=n)
    E = np.hstack([A, np.eye(m)])
    cost = np.concatenate([c, np.zeros(m)])

    def run_simplex(mod):
        T = np.zeros((m + 1, n + m + 1))
        T[:m, : n + m] = E
        T[:m, n + m] = bvec
        T[m, : n + m] = cost
        basis = np.arange(n, n + m, dtype=np.int64)
        status, _ = mod.simplex_pivot_loop(T, basis, n + m, 1e-9, 10_000)
        assert status == mod.SIMPLEX_OPTIMAL

    yield "simplex_pivot_loop (80 x 80 LP)", run_simplex

    rng = np.random.RandomState(15)
    nx = ny = 300
    passable = (rng.uniform(0.0, 1.0, size=nx * ny) > 0.2).astype(np.uint8)
    passable[:ny] = 1  # keep the source row open so most of the grid is reached
    sources = np.array([0], dtype=np.int64)
    yield "dijkstra_grid (300 x 300)", lambda mod: mod.dijkstra_grid(
        passable, nx, ny, 1.0, -1.0, sources)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    header = f"{'kernel':34s} {'fallback':>12s} {'compiled':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for name, fn in workloads():
        t_fb = median_time(lambda: fn(_fallback), args.repeats)
        if _core is None:
            print(f"{name:34s} {t_fb * 1e3:10.2f}ms {'n/a':>12s} {'':>9s}")
            continue
        t_co = median_time(lambda: fn(_core), args.repeats)
        print(f"{name:34s} {t_fb * 1e3:10.2f}ms {t_co * 1e3:10.2f}ms "
              f"{t_fb / t_co:8.1f}x")


if __name__ == "__main__":
    main()
