"""Benchmark the compiled extension core against the numpy fallback.

Times the two hot kernels on evolution-sized workloads: batched bicubic
sampling (semi-Lagrangian pickup, packet quadrature) and the far-field
boundary sum (Dirichlet data for the velocity recovery).

Run:  python benchmarks/bench_backends.py [n]
"""

import sys
import time

import numpy as np

from qel import _slowcore
from qel import backend


def _timeit(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(n=513):
    rng = np.random.default_rng(0)
    vals = rng.standard_normal((n, n))
    rq = rng.uniform(0.31, 1.69, n * n)
    zq = rng.uniform(-0.69, 0.69, n * n)
    out = np.empty(n * n)

    impls = [("numpy fallback", _slowcore)]
    if backend.COMPILED:
        from qel import _fastcore
        impls.insert(0, ("compiled core", _fastcore))

    print(f"bicubic_many: {n * n} queries on a {n}x{n} grid")
    ref = None
    times = {}
    for name, mod in impls:
        dt = _timeit(lambda: mod.bicubic_many(vals, 0.3, -0.7, 1.4 / (n - 1),
                                              1.4 / (n - 1), 1.7, 0.7, rq, zq, out))
        times[name] = dt
        got = out.copy()
        if ref is None:
            ref = got
        else:
            print(f"  max deviation between backends: {np.max(np.abs(got - ref)):.3e}")
        print(f"  {name:16s} {dt * 1e3:8.2f} ms  "
              f"({n * n / dt / 1e6:6.1f} M samples/s)")
    if len(times) == 2:
        a, b = times.values()
        print(f"  speedup: {b / a:.1f}x")

    nb, ns = 4 * n, 160 * 160
    rb = rng.uniform(0.31, 1.69, nb)
    zb = rng.uniform(-0.69, 0.69, nb)
    rs = rng.uniform(0.9, 1.1, ns)
    zs = rng.uniform(-0.1, 0.1, ns)
    gw = rng.standard_normal(ns)
    jtab = np.linspace(1.5, 8.0, 200_001)
    outb = np.empty(nb)
    print(f"farfield_sum: {nb} targets x {ns} sources")
    ref = None
    times = {}
    for name, mod in impls:
        dt = _timeit(lambda: mod.farfield_sum(rb, zb, rs, zs, gw, jtab, 0.9995, outb),
                     repeat=3)
        times[name] = dt
        got = outb.copy()
        if ref is None:
            ref = got
        else:
            print(f"  max rel deviation: "
                  f"{np.max(np.abs(got - ref)) / np.max(np.abs(ref)):.3e}")
        print(f"  {name:16s} {dt * 1e3:8.2f} ms  "
              f"({nb * ns / dt / 1e9:6.2f} G pairs/s)")
    if len(times) == 2:
        a, b = times.values()
        print(f"  speedup: {b / a:.1f}x")


if __name__ == "__main__":
    bench(int(sys.argv[1]) if len(sys.argv) > 1 else 513)
