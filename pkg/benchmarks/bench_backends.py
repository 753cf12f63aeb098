"""Benchmark the compiled kernels against the pure-numpy fallback.

Runs the hot operations (dense eigenvalues, singular values, shifted least
singular value, and the least-singular contour scan) on both backends at a
few sizes and prints a timing table. Usage:

    python benchmarks/bench_backends.py [--sizes 64,128,256] [--repeats 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from prodlab.backend import backend_name, set_backend
from prodlab.ensembles import gaussian, sample_matrix
from prodlab.linalg import (
    eigenvalues,
    least_singular_on_contour,
    singular_values,
    smallest_singular_value,
)


def time_call(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench(sizes: list[int], repeats: int) -> None:
    dist = gaussian()
    matrices = {n: sample_matrix(dist, n, 1000 + n) / np.sqrt(n) for n in sizes}
    ops = [
        ("eigenvalues", lambda m: eigenvalues(m)),
        ("singular_values", lambda m: singular_values(m)),
        ("smin(z=1.25)", lambda m: smallest_singular_value(m, 1.25 + 0.0j)),
        ("contour_scan(16)", lambda m: least_singular_on_contour(m, 1.25, 16)),
    ]
    rows = []
    for backend in ("numpy", "numba"):
        try:
            set_backend(backend)
        except Exception as exc:
            print(f"skipping backend {backend}: {exc}")
            continue
        # trigger any one-time compilation outside the timed region
        warm = matrices[sizes[0]]
        for _, fn in ops:
            fn(warm)
        for n in sizes:
            m = matrices[n]
            for name, fn in ops:
                rows.append((backend_name(), n, name, time_call(lambda: fn(m), repeats)))
    set_backend(None)
    width = max(len(r[2]) for r in rows)
    print(f"{'backend':8}  {'n':>5}  {'operation'.ljust(width)}  {'best (s)':>10}")
    for backend, n, name, seconds in rows:
        print(f"{backend:8}  {n:5d}  {name.ljust(width)}  {seconds:10.4f}")
    print()
    print("speedup (numpy time / numba time):")
    numpy_rows = {(n, name): s for b, n, name, s in rows if b == "numpy"}
    numba_rows = {(n, name): s for b, n, name, s in rows if b == "numba"}
    for key in sorted(numpy_rows):
        if key in numba_rows and numba_rows[key] > 0:
            n, name = key
            print(f"  n={n:5d}  {name.ljust(width)}  {numpy_rows[key] / numba_rows[key]:6.2f}x")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=str, default="64,128,256")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",") if s]
    bench(sizes, args.repeats)


if __name__ == "__main__":
    main()
