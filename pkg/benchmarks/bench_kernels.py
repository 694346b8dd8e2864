"""Time the numba kernels against their numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Both implementations are imported side by side, so PRIMECHAIN_DISABLE_NUMBA
does not matter here.  Each kernel is called once before timing to take
JIT compilation out of the numbers.
"""
import argparse
import math
import time

import numpy as np

from primechain import kernels
from primechain._accel import NUMBA_AVAILABLE
from primechain.prime_engine import small_primes


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(scale):
    rng = np.random.default_rng(0)
    lo = 10**9
    width = int(2_000_000 * scale)
    base = small_primes(math.isqrt(lo + width))
    yield "sieve_segment", (lambda impl: impl.sieve_segment(lo, lo + width, base))

    T, A = int(50_000 * scale), 4
    d = np.array([q for q in range(1, 3000) if q % 2 and q % 3], dtype=np.int64)
    starts = (rng.integers(0, 10**6, size=d.size) % d).astype(np.int64)
    vals = rng.standard_normal((A, d.size))
    yield "accumulate", (lambda impl: impl.accumulate(np.zeros((A, T)), starts, d, vals))

    S = rng.standard_normal((16, 5, int(200_000 * scale)))
    yield "tensor_combine", (lambda impl: impl.tensor_combine(S))

    table = rng.random(int(4_000_000 * scale)) < 0.1
    cand = np.arange(0, table.size - 200, 6, dtype=np.int64)
    offs = np.array([0, 2, 6, 8, 12], dtype=np.int64)
    yield "pattern_mask", (lambda impl: impl.pattern_mask(table, 0, cand, offs))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0, help="multiply problem sizes")
    args = ap.parse_args(argv)
    if not NUMBA_AVAILABLE:
        print("numba is not installed; nothing to compare")
        return 1
    print(f"{'kernel':<16}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, call in cases(args.scale):
        a = best_of(lambda: call(kernels.numba_impl), args.repeat)
        b = best_of(lambda: call(kernels.numpy_impl), args.repeat)
        print(f"{name:<16}{a * 1e3:>12.2f}{b * 1e3:>12.2f}{b / a:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
