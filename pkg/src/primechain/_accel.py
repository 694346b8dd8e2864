"""Numba toggle and worker-count plumbing.

Set ``PRIMECHAIN_DISABLE_NUMBA=1`` to force the pure-numpy kernels, and
``PRIMECHAIN_THREADS`` to cap the number of worker threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_FALSY = ("", "0", "false", "no", "off")

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("PRIMECHAIN_DISABLE_NUMBA", "").lower() in _FALSY

numba_opts = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "boundscheck": False,
}


def njit(func):
    """Compile ``func`` with numba when available; otherwise return it untouched."""
    if not NUMBA_AVAILABLE:
        return func
    return numba.njit(**numba_opts)(func)


def worker_count(workers: int | None = None) -> int:
    cap = os.environ.get("PRIMECHAIN_THREADS")
    n = workers if workers is not None else (int(cap) if cap else (os.cpu_count() or 1))
    if cap and workers is not None:
        n = min(n, int(cap))
    return max(1, int(n))


def split_range(lo: int, hi: int, parts: int) -> list[tuple[int, int]]:
    """Split ``[lo, hi)`` into at most ``parts`` contiguous, ordered pieces."""
    parts = max(1, min(parts, hi - lo))
    step = -(-(hi - lo) // parts)
    return [(a, min(a + step, hi)) for a in range(lo, hi, step)]


def map_ordered(fn, items, workers: int):
    """Apply ``fn`` to ``items``, returning results in input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
