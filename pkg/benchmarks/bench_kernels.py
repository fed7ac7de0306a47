"""Benchmark the numba-compiled recurrence table against the numpy fallback.

Run twice to see both backends:

    python benchmarks/bench_kernels.py                 # numba (default)
    MASSPOLY_NO_NUMBA=1 python benchmarks/bench_kernels.py   # numpy fallback

The recurrence table is the hot kernel: every basis evaluation, kernel sum,
operator matrix, and probe entry reduces to it.
"""

import time

import numpy as np

from masspoly._kernels import HAVE_NUMBA, recurrence_table
from masspoly.opoly import basis_for
from masspoly import legendre


def bench(nmax, npts, repeats=5):
    basis = basis_for(legendre(), nmax)
    al = np.asarray(basis.rec.alphas[: nmax + 1], dtype=float)
    sb = np.sqrt(np.asarray(basis.rec.betas[: nmax + 1], dtype=float))
    x = np.linspace(-0.999, 0.999, npts)
    recurrence_table(al, sb, x, nmax)  # warm-up (JIT compile on the numba path)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        recurrence_table(al, sb, x, nmax)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    backend = "numba" if HAVE_NUMBA else "numpy"
    print(f"backend: {backend}")
    print(f"{'nmax':>6} {'npts':>8} {'best (ms)':>12} {'Mcell/s':>10}")
    for nmax, npts in [(50, 1000), (200, 1000), (200, 10000), (500, 10000), (1000, 50000)]:
        t = bench(nmax, npts)
        cells = (nmax + 1) * npts
        print(f"{nmax:>6} {npts:>8} {1e3 * t:>12.3f} {cells / t / 1e6:>10.1f}")


if __name__ == "__main__":
    main()
