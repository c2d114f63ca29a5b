"""Benchmark the compiled kernels against the pure-Python fallback.

Run as  python -m qva.benchmarks  (builds nothing; reports which backend
is active and times the two hot paths on a representative workload).
Force the fallback in a separate process with QVA_PURE_PYTHON=1.
"""

import time
from fractions import Fraction

from qva import _kernels, _kernels_py


def _workload_conv(kern, reps=3):
    n = 18
    items = [((i, j), Fraction(i - j, 1 + ((i * j) % 7)))
             for i in range(-n, n) for j in range(-n, n)]
    lo, hi = (-n, -n), (n, n)
    t0 = time.perf_counter()
    for _ in range(reps):
        kern.conv_window(items, items[: len(items) // 2], lo, hi)
    return (time.perf_counter() - t0) / reps


def _workload_axpy(kern, reps=200):
    src = {(i, i % 5): (3 * i + 1) for i in range(400)}
    t0 = time.perf_counter()
    for _ in range(reps):
        dst = {(i, (i + 1) % 5): (2 * i - 7) for i in range(400)}
        kern.axpy_int(dst, src, 3, -2)
    return (time.perf_counter() - t0) / reps


def main():
    print(f"active backend: {_kernels.BACKEND}")
    rows = []
    for label, kern in (("python", _kernels_py),
                        (_kernels.BACKEND, _kernels)):
        rows.append((label, _workload_conv(kern), _workload_axpy(kern)))
    print(f"{'backend':>10}  {'conv_window':>12}  {'axpy_int':>12}")
    for label, tc, ta in rows:
        print(f"{label:>10}  {tc * 1e3:>10.2f}ms  {ta * 1e6:>10.1f}us")
    if _kernels.BACKEND == "python":
        print("compiled extension not built; both rows use the fallback")


if __name__ == "__main__":
    main()
