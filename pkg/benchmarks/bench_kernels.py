"""Time the compiled and pure-numpy projection kernels against each other.

Usage::

    python benchmarks/bench_kernels.py [--sizes 20 40 80] [--repeat 50]

The compiled path is what ``PGL_LAB_BACKEND=numba`` (the default) selects;
``PGL_LAB_BACKEND=numpy`` forces the reference implementation.
"""

import argparse
import timeit

import numpy as np

from pgl_lab import kernels
from pgl_lab._accel import HAVE_NUMBA


def bench(fn, arg, repeat):
    fn(arg)  # warm-up / JIT compilation
    return min(timeit.repeat(lambda: fn(arg), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 40, 80])
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy path is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12}{'n':>5}{'numpy [ms]':>14}{'numba [ms]':>14}{'speedup':>10}")
    for n in args.sizes:
        A = rng.normal(0.0, 0.5, (n, n))
        cases = (
            ("rows", kernels.project_rows_numpy, kernels.project_rows_numba),
            ("dykstra", lambda X: kernels.dykstra_numpy(X, 1000, 1e-9), lambda X: kernels.dykstra_numba(X, 1000, 1e-9)),
        )
        for name, f_np, f_nb in cases:
            t_np = bench(f_np, A, args.repeat)
            t_nb = bench(f_nb, A, args.repeat) if HAVE_NUMBA else float("nan")
            print(f"{name:<12}{n:>5}{1e3 * t_np:>14.3f}{1e3 * t_nb:>14.3f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
