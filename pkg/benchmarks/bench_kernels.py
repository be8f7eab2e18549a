"""Compare the compiled and numpy block evaluators, then time a full record scan on each.

    python benchmarks/bench_kernels.py [--points N] [--repeat R]
"""

import argparse
import time

import numpy as np

from wtransfer.corpus import builtin_corpus
from wtransfer.exponents import record_scan
from wtransfer.kernels import BACKENDS


def _block_args(points: int):
    theta = np.array([[2**0.5, 3**0.5]])
    side = int(points**0.5) // 2
    lo = np.array([-side, -side], dtype=np.int64)
    hi = np.array([side, side], dtype=np.int64)
    count = int(np.prod(hi - lo + 1))
    return (theta, np.zeros(1), np.array([2.0, 2.0]), np.array([1.0]), np.zeros(1), lo, hi, 0, count)


def _max_gap(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    if not np.array_equal(np.isinf(a), np.isinf(b)):
        return float("inf")
    finite = np.isfinite(a)
    return float(np.max(np.abs(a[finite] - b[finite]), initial=0.0))


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=1 << 20)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--t-max", type=int, default=10**6)
    args = ap.parse_args()

    block = _block_args(args.points)
    reference = None
    print(f"block evaluator, {block[-1]} points")
    for name, fn in sorted(BACKENDS.items()):
        out = fn(*block)
        if reference is None:
            reference = out
        else:
            gap = max(_max_gap(a, b) for a, b in zip(out, reference))
            print(f"  {name} vs {sorted(BACKENDS)[0]}: largest difference {gap:.3g}")
        secs = _best(lambda: fn(*block), args.repeat)
        print(f"  {name:8s} {secs * 1e3:9.2f} ms  {block[-1] / secs / 1e6:8.2f} Mpoints/s")

    inst = next(e.instance for e in builtin_corpus() if e.id == "sqrt23_weighted")
    print(f"record scan of {inst.name} to t = {args.t_max}")
    for name in sorted(BACKENDS):
        secs = _best(lambda: record_scan(inst, args.t_max, backend=name), max(1, args.repeat // 2))
        print(f"  {name:8s} {secs:9.3f} s")


if __name__ == "__main__":
    main()
