"""Benchmark the numba kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [repeats]

Covers the three hot paths: piecewise-map box enclosures, batched RK4
time-one maps, and the fibered viability pruning fixpoint. The numba side is
warmed up once so compilation is not timed.
"""

import sys
import time

import numpy as np

from rdsconley._kernels import _numpy_impl as NP

try:
    from rdsconley._kernels import _numba_impl as NB
except ImportError:
    NB = None


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(repeats=5):
    rng = np.random.default_rng(0)
    n_boxes = 4000
    lo = rng.uniform(-1, 0.9, n_boxes)
    hi = lo + rng.uniform(1e-3, 0.1, n_boxes)
    pts_big = rng.uniform(-1.1, 1.1, 20_000)
    pts_fiber = rng.uniform(-1.1, 1.1, 450)  # one fiber's worth of samples

    # graph-shaped boxes: one transition grid per fiber, as the pipeline uses
    blo = rng.uniform(-1, 0.9, 150)
    bhi = blo + 0.0125

    F, B = 64, 400
    succ_lo = rng.integers(0, B, (F, B))
    succ_hi = np.minimum(succ_lo + rng.integers(-1, 4, (F, B)), B - 1)
    alive = rng.random((F + 1, B)) < 0.8

    def fibered_rk4(impl):
        for _ in range(F):
            impl.ode_points(NP.FAM_PITCHFORK, pts_fiber, 0.5, 0.0, 64, 1.0)

    def fibered_graph(impl):
        for _ in range(F):
            impl.ode_box_images(NP.FAM_SUBCRITICAL, blo, bhi, -0.4, 0.0,
                                64, 0.01, 4.8)

    cases = [
        ("discrete_box_images (4k boxes)",
         lambda impl: impl.discrete_box_images(NP.FAM_EXAMPLE1, lo, hi, -0.09)),
        ("rk4 graph build (64 x 450 pts)", fibered_rk4),
        ("ode_box_images (64 x 150 boxes)", fibered_graph),
        ("rk4 one batch (20k pts)",
         lambda impl: impl.ode_points(NP.FAM_PITCHFORK, pts_big, 0.5, 0.0, 64, 1.0)),
        ("prune_alive (64x400 fibered)",
         lambda impl: impl.prune_alive(succ_lo, succ_hi, alive)),
    ]

    impls = [("numpy", NP)]
    if NB is not None:
        for _name, fn in cases:
            fn(NB)  # trigger jit compilation outside the timed region
        impls.append(("numba", NB))
    else:
        print("numba unavailable; benchmarking the numpy fallback only")

    header = "%-32s" % "kernel" + "".join("%12s" % name for name, _ in impls)
    if len(impls) == 2:
        header += "%10s" % "speedup"
    print(header)
    print("-" * len(header))
    for label, fn in cases:
        times = [_time(lambda impl=impl: fn(impl), repeats) for _name, impl in impls]
        row = "%-32s" % label + "".join("%10.2fms" % (t * 1e3) for t in times)
        if len(times) == 2 and times[1] > 0:
            row += "%9.1fx" % (times[0] / times[1])
        print(row)


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 5)
