"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Compilation is triggered once before timing, so numbers are steady-state.
"""
import argparse
import timeit

import numpy as np

from chainflow import kernels


def sine_sum_case(N):
    c = np.random.default_rng(0).normal(size=N - 1)
    return (c, N)


def verlet_case(N, nsteps):
    x0 = np.arange(N) / N
    v0 = 1e-3 * np.sin(np.pi * np.arange(N) / N)
    return (x0, v0, float(N * N), 1.0 / N, 0.05 / N, nsteps, nsteps, 1e-3 / N)


CASES = [
    ("sine_sum", "N=256", sine_sum_case(256)),
    ("sine_sum", "N=1024", sine_sum_case(1024)),
    ("verlet_nn", "N=32 steps=10000", verlet_case(32, 10_000)),
    ("verlet_nn", "N=256 steps=10000", verlet_case(256, 10_000)),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"{'kernel':<10} {'case':<20} {'numba [ms]':>11} {'numpy [ms]':>11} {'speedup':>8}")
    for name, label, case in CASES:
        times = {}
        for backend in ("numba", "numpy"):
            fn = kernels.IMPLEMENTATIONS[backend][name]
            fn(*case)
            times[backend] = min(timeit.repeat(lambda: fn(*case), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<10} {label:<20} {times['numba']:>11.3f} {times['numpy']:>11.3f} "
              f"{times['numpy'] / times['numba']:>7.1f}x")


if __name__ == "__main__":
    main()
