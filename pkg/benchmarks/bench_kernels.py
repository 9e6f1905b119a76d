"""Time the numba and pure-numpy kernel paths against each other.

    python benchmarks/bench_kernels.py [--sizes 10,30,60] [--repeat 5]

Both paths run the same algorithm on the same inputs; the script also
checks that their outputs agree before reporting timings.
"""
import argparse
import time

import numpy as np

from localpower import kernels
from localpower.linalg_core import JACOBI_MAX_SWEEPS, JACOBI_TOL, SPECTRAL_MAX_ITER, SPECTRAL_TOL


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def psd(d, seed):
    B = np.random.default_rng(seed).standard_normal((d, d))
    M = B @ B.T
    return 0.5 * (M + M.T)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="10,30,60,100")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    # compile once outside the timed region
    warm = psd(4, 0)
    kernels.jacobi_numba(warm, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    kernels.power_numba(warm, np.ones(4), SPECTRAL_TOL, SPECTRAL_MAX_ITER)

    print(f"{'kernel':<8} {'d':>5} {'numba [ms]':>12} {'numpy [ms]':>12} {'speedup':>8}")
    for d in sizes:
        M = psd(d, d)
        v0 = np.random.default_rng(1).standard_normal(d)
        cases = [
            ("jacobi", kernels.jacobi_numba, kernels.jacobi_numpy, (M, JACOBI_TOL, JACOBI_MAX_SWEEPS)),
            ("power", kernels.power_numba, kernels.power_numpy, (M, v0, SPECTRAL_TOL, SPECTRAL_MAX_ITER)),
        ]
        for name, fast, slow, argv in cases:
            a, b = fast(*argv), slow(*argv)
            assert np.allclose(np.sort(np.atleast_1d(a[0])), np.sort(np.atleast_1d(b[0])), rtol=1e-8), name
            tf = best_of(lambda: fast(*argv), args.repeat)
            ts = best_of(lambda: slow(*argv), args.repeat)
            print(f"{name:<8} {d:>5} {1e3 * tf:>12.3f} {1e3 * ts:>12.3f} {ts / tf:>8.1f}x")


if __name__ == "__main__":
    main()
