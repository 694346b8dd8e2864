"""Primality over the 64-bit integers: sieving, Miller-Rabin, Mobius, and
pattern (prime constellation) witness search."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from ._accel import map_ordered, split_range, worker_count
from .errors import InputError, ResourceError

U64_LIMIT = 1 << 64

# 1 MiB of one-byte flags per segment
DEFAULT_SEGMENT = 1 << 20
# max integers sieved in one call (one byte each while sieving)
MEMORY_BUDGET = 1 << 31
# largest base prime table built; above it short ranges are tested one by one
_BASE_LIMIT = 1 << 28
_MR_SPAN = 1 << 24

# first 12 primes: a complete strong-pseudoprime witness set below 3.3e24 > 2^64
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _check_u64(n: int, what: str = "n") -> int:
    n = int(n)
    if n < 0 or n >= U64_LIMIT:
        raise InputError(f"{what}={n} outside the unsigned 64-bit range")
    return n


@lru_cache(maxsize=8)
def small_primes(limit: int) -> np.ndarray:
    """All primes <= limit as int64 (plain Eratosthenes)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


@dataclass(frozen=True)
class PrimeRange:
    """Packed primality table for the half-open range ``[lo, hi)``."""

    lo: int
    hi: int
    bits: np.ndarray = field(repr=False)

    def __len__(self):
        return self.hi - self.lo

    def mask(self) -> np.ndarray:
        return np.unpackbits(self.bits, count=self.hi - self.lo, bitorder="little").astype(bool)

    def primes(self) -> np.ndarray:
        idx = np.flatnonzero(self.mask())
        if self.hi > (1 << 63):
            return np.array([self.lo + int(i) for i in idx], dtype=np.uint64)
        return idx.astype(np.int64) + self.lo

    def __contains__(self, n: int) -> bool:
        if not self.lo <= n < self.hi:
            raise InputError(f"{n} outside [{self.lo}, {self.hi})")
        i = n - self.lo
        return bool((self.bits[i >> 3] >> (i & 7)) & 1)

    def count(self) -> int:
        return int(np.unpackbits(self.bits, count=self.hi - self.lo, bitorder="little").sum())


def _sieve_bool(lo: int, hi: int, segment_size: int = DEFAULT_SEGMENT) -> np.ndarray:
    if hi - lo > MEMORY_BUDGET:
        raise ResourceError(f"sieving [{lo}, {hi}) exceeds the memory budget of {MEMORY_BUDGET}")
    root = math.isqrt(max(hi - 1, 0))
    if root > _BASE_LIMIT:
        return _mr_table(lo, hi)
    base = small_primes(root)
    # numba works in int64; very large ranges take the numpy route
    seg_fn = kernels.sieve_segment if hi < (1 << 62) else kernels.numpy_impl.sieve_segment
    out = np.empty(hi - lo, dtype=bool)
    for a in range(lo, hi, segment_size):
        b = min(a + segment_size, hi)
        out[a - lo : b - lo] = seg_fn(a, b, base)
    return out


def _mr_table(lo: int, hi: int) -> np.ndarray:
    """Primality flags when the base primes would not fit: small-prime sieve, then Miller-Rabin."""
    if hi - lo > _MR_SPAN:
        raise ResourceError(f"[{lo}, {hi}) needs base primes above {_BASE_LIMIT}; "
                            f"ranges that high are limited to {_MR_SPAN} integers")
    out = kernels.numpy_impl.sieve_segment(lo, hi, small_primes(1 << 16))
    for i in np.flatnonzero(out).tolist():
        out[i] = is_prime(lo + i)
    return out


def sieve_range(lo: int, hi: int, segment_size: int = DEFAULT_SEGMENT) -> PrimeRange:
    """Exact primality table for ``[lo, hi)`` via a segmented sieve.

    ``segment_size`` only affects speed, never the result.
    """
    lo = _check_u64(lo, "lo")
    if hi > U64_LIMIT:
        raise InputError(f"hi={hi} exceeds 2^64")
    if not lo < hi:
        raise InputError(f"empty range [{lo}, {hi})")
    if segment_size < 1:
        raise InputError("segment_size must be positive")
    flags = _sieve_bool(lo, hi, segment_size)
    return PrimeRange(lo, hi, np.packbits(flags, bitorder="little"))


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for every n < 2^64."""
    n = _check_u64(n)
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_brent(n: int) -> int:
    if n % 2 == 0:
        return 2
    for c in range(1, n):
        y, r, q, g = 2, 1, 1, 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(128, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += 128
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g
    raise AssertionError("unreachable")  # pragma: no cover


def factorize(n: int) -> dict[int, int]:
    """Prime factorisation {p: exponent} of 1 <= n < 2^64."""
    n = _check_u64(n)
    if n < 1:
        raise InputError("factorize needs n >= 1")
    out: dict[int, int] = {}
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if is_prime(m):
            out[m] = out.get(m, 0) + 1
            continue
        r = math.isqrt(m)
        if r * r == m:
            stack += [r, r]
            continue
        f = _pollard_brent(m)
        stack += [f, m // f]
    return dict(sorted(out.items()))


def mobius(n: int) -> int:
    if n < 1:
        raise InputError("mobius needs n >= 1")
    f = factorize(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def mobius_table(limit: int) -> np.ndarray:
    """mu(0..limit) as int8 (mu(0) set to 0)."""
    mu = np.ones(limit + 1, dtype=np.int8)
    mu[0] = 0
    for p in small_primes(limit).tolist():
        mu[p::p] *= -1
        mu[p * p :: p * p] = 0
    return mu


@dataclass(frozen=True)
class WitnessCertificate:
    """Integers n in the searched range with n + h prime for every offset h."""

    offsets: tuple[int, ...]
    witnesses: tuple[int, ...]
    searched_up_to: int

    def to_dict(self) -> dict:
        return {
            "offsets": list(self.offsets),
            "witnesses": list(self.witnesses),
            "searched_up_to": self.searched_up_to,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WitnessCertificate":
        return cls(tuple(int(x) for x in d["offsets"]), tuple(int(x) for x in d["witnesses"]),
                   int(d["searched_up_to"]))

    def verify(self) -> bool:
        """Re-check every witness with is_prime alone."""
        ws = self.witnesses
        if any(b <= a for a, b in zip(ws, ws[1:])):
            return False
        if ws and ws[-1] > self.searched_up_to:
            return False
        return all(is_prime(n + h) for n in ws for h in self.offsets)


def _offsets_tuple(offsets) -> tuple[int, ...]:
    offs = tuple(int(h) for h in getattr(offsets, "offsets", offsets))
    if not offs:
        raise InputError("offsets must be non-empty")
    if any(h < 0 for h in offs) or any(b <= a for a, b in zip(offs, offs[1:])):
        raise InputError(f"offsets {offs} must be non-negative and strictly increasing")
    return offs


def _class_of(residue) -> tuple[int, int] | None:
    if residue is None:
        return None
    if hasattr(residue, "W"):
        return int(residue.b), int(residue.W)
    b, W = residue
    return int(b) % int(W), int(W)


# chunk of candidate n values examined per sieve call
_CHUNK = 1 << 21


def _scan(offs, lo, hi, max_count, b, stride):
    """Witnesses n in [lo, hi) with n = b (stride), in order, at most max_count."""
    found: list[int] = []
    big = hi + offs[-1] > (1 << 62)
    start = lo + (b - lo) % stride
    for a in range(start, hi, _CHUNK * stride):
        top = min(a + _CHUNK * stride, hi)
        if big:
            cand = range(a, top, stride)
            hits = [n for n in cand if all(is_prime(n + h) for h in offs)]
        else:
            lo_s, hi_s = a + offs[0], top - 1 + offs[-1] + 1
            table = _sieve_bool(lo_s, hi_s)
            cand = np.arange(a, top, stride, dtype=np.int64)
            mask = kernels.pattern_mask(table, lo_s, cand, np.asarray(offs, dtype=np.int64))
            hits = cand[mask].tolist()
        found.extend(hits)
        if len(found) >= max_count:
            return found[:max_count]
    return found


def find_witnesses(offsets, lo: int, hi: int, max_count: int = 1 << 62, residue=None,
                   workers: int | None = None) -> WitnessCertificate:
    """All n in ``[lo, hi)`` (up to ``max_count``) making every ``n + h`` prime.

    ``residue`` is an optional class: a ``CrtClass`` or ``(b, W)`` pair restricting
    the scan to n = b (W).  Without it the scan runs over the single parity class
    the offsets allow, plus the few n where some n + h equals 2.  An empty result
    is normal.  ``searched_up_to`` is the last n examined exhaustively.
    """
    offs = _offsets_tuple(offsets)
    lo, hi = int(lo), int(hi)
    if lo < 0 or not lo < hi:
        raise InputError(f"bad search range [{lo}, {hi})")
    if hi - 1 + offs[-1] >= U64_LIMIT:
        raise InputError(f"n + {offs[-1]} overflows 64 bits for n < {hi}")
    if max_count < 1:
        raise InputError("max_count must be >= 1")
    cls = _class_of(residue)

    special = sorted({2 - h for h in offs if lo <= 2 - h < hi})
    if cls is not None:
        b, stride = cls
        special = [n for n in special if n % stride == b]
    elif len({h % 2 for h in offs}) == 1:
        b, stride = (1 - offs[0]) % 2, 2
        special = [n for n in special if n % 2 != b]
    else:
        # mixed parities: some n + h is even, so it must be 2
        b, stride = None, None
    special = [n for n in special if all(is_prime(n + h) for h in offs)]

    found: list[int] = []
    if stride is not None:
        nw = worker_count(workers)
        pieces = split_range(lo, hi, nw) if nw > 1 else [(lo, hi)]
        parts = map_ordered(lambda r: _scan(offs, r[0], r[1], max_count, b, stride), pieces, nw)
        for p in parts:
            found.extend(p)
    found = sorted(set(found) | set(special))
    if len(found) >= max_count:
        found = found[:max_count]
        upto = found[-1]
    else:
        upto = hi - 1
    return WitnessCertificate(offs, tuple(int(n) for n in found), upto)
