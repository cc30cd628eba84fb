"""Time the numba and numpy paths of the hot kernels.

Run with ``python benchmarks/bench_kernels.py``.  The correlation matrix
is timed at the design sizes of the benchmark scenarios (it is built once
per GA fitness evaluation); the Lindley recursion at the customer counts
of one M/M/1 run.  A JIT warm-up call precedes every numba timing.
"""
import argparse
import timeit

import numpy as np

from larpcesk import _accel, kernels


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench_correlation(sizes, dim, repeat):
    rng = np.random.default_rng(0)
    rows = []
    for k in sizes:
        x = rng.uniform(size=(k, dim))
        theta = rng.uniform(0.5, 5.0, dim)
        kernels.gaussian_correlation_matrix_numba(x, x, theta)
        number = max(1, 20000 // (k * k) + 1)
        t_np = best_of(lambda: kernels.gaussian_correlation_matrix_numpy(x, x, theta), repeat, number)
        t_nb = best_of(lambda: kernels.gaussian_correlation_matrix_numba(x, x, theta), repeat, number)
        rows.append((f"correlation k={k} M={dim}", t_np, t_nb))
    return rows


def bench_lindley(counts, repeat):
    rng = np.random.default_rng(1)
    rows = []
    for n in counts:
        a = rng.exponential(1 / 0.9, n)
        s = rng.exponential(1.0, n)
        kernels.lindley_waits_numba(a, s, 0.0)
        t_np = best_of(lambda: kernels.lindley_waits_numpy(a, s, 0.0), repeat, 5)
        t_nb = best_of(lambda: kernels.lindley_waits_numba(a, s, 0.0), repeat, 5)
        rows.append((f"lindley n={n}", t_np, t_nb))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    if not _accel.HAS_NUMBA:
        print("numba is not importable; only the numpy path exists")
        return
    rows = []
    rows += bench_correlation([10, 32, 64, 128, 256], 1, args.repeat)
    rows += bench_correlation([64, 128, 256], 3, args.repeat)
    rows += bench_lindley([1_000, 5_400, 100_000, 1_000_000], args.repeat)
    print(f"dispatch uses numba: {_accel.USE_NUMBA}")
    print(f"{'kernel':<28}{'numpy (ms)':>12}{'numba (ms)':>12}{'speed-up':>10}")
    for name, t_np, t_nb in rows:
        print(f"{name:<28}{1e3 * t_np:>12.4f}{1e3 * t_nb:>12.4f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
