"""Compiled vs numpy QR sweep.

    python benchmarks/bench_kernels.py [--T 10000] [--repeat 3]

Times ``qr_sweep`` from each backend on the same factor stack and reports
the agreement of the accumulated log-diagonals.
"""
import argparse
import time

import numpy as np

from picketfence import kernels
from picketfence.ensemble import INF
from picketfence.sampler import RngStream, sample_factors


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--sizes", default="1,2,3,4,8")
    args = ap.parse_args(argv)

    if kernels.compiled_qr_sweep is None:
        print("compiled kernel not built; only the numpy fallback is available")
    print(f"T = {args.T}, best of {args.repeat}")
    print(f"{'n':>3} {'numpy [s]':>10} {'cython [s]':>11} {'speedup':>8} {'max |dlog|':>11}")
    for n in (int(v) for v in args.sizes.split(",")):
        entries = [INF, n + 3] * (args.T // 2)
        F = sample_factors(entries, n, RngStream(0, n).generator())
        Q0 = np.eye(n, dtype=np.complex128)
        t_py = best_of(lambda: kernels.python_qr_sweep(F, Q0), args.repeat)
        if kernels.compiled_qr_sweep is None:
            print(f"{n:>3} {t_py:>10.4f} {'-':>11} {'-':>8} {'-':>11}")
            continue
        t_cy = best_of(lambda: kernels.compiled_qr_sweep(F, Q0), args.repeat)
        diff = np.max(np.abs(
            kernels.python_qr_sweep(F, Q0)[1].sum(0) - kernels.compiled_qr_sweep(F, Q0)[1].sum(0)
        ))
        print(f"{n:>3} {t_py:>10.4f} {t_cy:>11.4f} {t_py / t_cy:>7.1f}x {diff:>11.2e}")


if __name__ == "__main__":
    main()
