"""Timing comparison of the numpy and compiled array kernels.

Usage:
    python benchmarks/bench_backends.py [--points 500000] [--repeats 5]

Each backend is selected through the VACKIT_BACKEND environment variable,
so the timed call dispatches exactly the way library callers do.  The
compiled backend includes a warmup call to keep JIT compilation out of
the timings.  Results from the two backends are cross-checked before
printing so the table never reports a speedup for a kernel that drifted.
"""

import argparse
import math
import os
import time

import numpy as np

from vackit import backends


def best_of(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def make_workloads(n_points: int, seed: int):
    rng = np.random.default_rng(seed)
    points = np.column_stack([
        rng.uniform(-0.3, 0.3, n_points),
        rng.uniform(-0.2, 0.2, n_points),
        rng.uniform(0.2, 1.5, n_points),
    ])
    # sparse flags with the only sustained run at the tail, so the scan
    # has to walk the whole array instead of exiting on the first sample
    flags = rng.random(n_points) > 0.99
    flags[-8:] = True
    return points, flags


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=500_000,
                        help="workload size (default 500000)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats, best is reported (default 5)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    available = backends.available_backends()
    points, flags = make_workloads(args.points, args.seed)
    half_ipd = 0.063 / 2
    beta = math.radians(0.22)

    kernels = {
        "remap_points": lambda: backends.remap_points(points, half_ipd, beta),
        "sustained_run_start": lambda: backends.sustained_run_start(flags, 5),
    }

    results: dict[tuple[str, str], float] = {}
    outputs: dict[tuple[str, str], object] = {}
    for backend in available:
        os.environ[backends.BACKEND_ENV_VAR] = backend
        for name, fn in kernels.items():
            fn()  # warmup (JIT compile, page in)
            results[(name, backend)] = best_of(fn, args.repeats)
            outputs[(name, backend)] = fn()
    os.environ.pop(backends.BACKEND_ENV_VAR, None)

    if len(available) > 1:
        a, b = available[0], available[1]
        remapped_a, bad_a = outputs[("remap_points", a)]
        remapped_b, bad_b = outputs[("remap_points", b)]
        assert bad_a == bad_b
        np.testing.assert_allclose(remapped_a, remapped_b, rtol=5e-15)
        assert outputs[("sustained_run_start", a)] == \
            outputs[("sustained_run_start", b)]

    print(f"workload: {args.points} points, best of {args.repeats}")
    print(f"{'kernel':<22}{'backend':<10}{'best ms':>10}{'Mpts/s':>10}")
    for name in kernels:
        for backend in available:
            elapsed = results[(name, backend)]
            rate = args.points / elapsed / 1e6
            print(f"{name:<22}{backend:<10}{elapsed * 1e3:>10.2f}"
                  f"{rate:>10.1f}")
    if "numpy" in available and len(available) > 1:
        for name in kernels:
            for backend in available:
                if backend == "numpy":
                    continue
                ratio = results[(name, "numpy")] / results[(name, backend)]
                print(f"{name}: {backend} is {ratio:.1f}x numpy")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
