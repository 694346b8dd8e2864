"""Admissible offset tuples, avoided residue classes, and the CRT class b (W)."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibleError, InputError
from .prime_engine import U64_LIMIT, small_primes


@dataclass(frozen=True)
class OffsetTuple:
    """Strictly increasing, non-empty tuple of non-negative shifts."""

    offsets: tuple[int, ...]

    def __post_init__(self):
        offs = tuple(int(h) for h in self.offsets)
        if not offs:
            raise InputError("an offset tuple needs at least one entry")
        if offs[0] < 0:
            raise InputError(f"offsets must be >= 0, got {offs[0]}")
        for a, b in zip(offs, offs[1:]):
            if b <= a:
                raise InputError(f"offsets must be strictly increasing ({a} then {b})")
        if offs[-1] >= U64_LIMIT:
            raise InputError("offset exceeds 64 bits")
        object.__setattr__(self, "offsets", offs)

    @classmethod
    def of(cls, *values) -> "OffsetTuple":
        if len(values) == 1 and not isinstance(values[0], int):
            values = tuple(values[0])
        return cls(tuple(values))

    def __len__(self):
        return len(self.offsets)

    def __iter__(self):
        return iter(self.offsets)

    def __getitem__(self, i):
        return self.offsets[i]

    def shifted(self, c: int) -> "OffsetTuple":
        return OffsetTuple(tuple(h + c for h in self.offsets))


def _as_offsets(t) -> OffsetTuple:
    return t if isinstance(t, OffsetTuple) else OffsetTuple(tuple(t))


def residue_coverage(t, p: int) -> frozenset[int]:
    """The set {h mod p : h in t}."""
    return frozenset(h % p for h in _as_offsets(t))


@dataclass(frozen=True)
class PrimeCheck:
    prime: int
    covered: int
    avoided: int | None
    # when every class is covered: cover[r] is an offset h with h = r (mod p)
    cover: tuple[int, ...] | None = None

    def to_dict(self) -> dict:
        d = {"covered": self.covered, "avoided": self.avoided}
        if self.cover is not None:
            d["cover"] = list(self.cover)
        return d


@dataclass(frozen=True)
class AdmissibilityReport:
    offsets: tuple[int, ...]
    admissible: bool
    per_prime: dict[int, PrimeCheck]

    def to_dict(self) -> dict:
        return {
            "offsets": list(self.offsets),
            "admissible": self.admissible,
            "per_prime": {str(p): c.to_dict() for p, c in self.per_prime.items()},
        }


def check_prime(t, p: int) -> PrimeCheck:
    t = _as_offsets(t)
    cov = residue_coverage(t, p)
    free = [r for r in range(p) if r not in cov]
    if free:
        return PrimeCheck(p, len(cov), free[0])
    cover = {}
    for h in t:
        cover.setdefault(h % p, h)
    return PrimeCheck(p, p, None, tuple(cover[r] for r in range(p)))


def is_admissible(t) -> AdmissibilityReport:
    """Check the primes p <= len(t); larger primes always have a free class."""
    t = _as_offsets(t)
    per = {p: check_prime(t, p) for p in small_primes(len(t)).tolist()}
    ok = all(c.avoided is not None for c in per.values())
    return AdmissibilityReport(t.offsets, ok, per)


@dataclass(frozen=True)
class CrtClass:
    """Residue class b (W) with every b + h coprime to W."""

    W: int
    b: int

    def to_dict(self) -> dict:
        return {"W": self.W, "b": self.b}


def primorial(z: int) -> int:
    return math.prod(small_primes(int(z)).tolist())


def primitive_class(t, z: int = 7) -> CrtClass:
    """CRT class b (W), W the product of primes <= z.

    For each p | W the smallest residue a avoided by ``t`` is chosen and
    b = -a (mod p), so b + h = h - a is a unit mod p for every h.
    """
    t = _as_offsets(t)
    if z < 2:
        raise InputError(f"z must be >= 2, got {z}")
    W, b = 1, 0
    for p in small_primes(int(z)).tolist():
        chk = check_prime(t, p)
        if chk.avoided is None:
            raise InfeasibleError(f"offsets cover every residue class mod {p}", prime=p)
        r = (-chk.avoided) % p
        # combine b (mod W) with r (mod p)
        k = ((r - b) * pow(W, -1, p)) % p
        b, W = b + W * k, W * p
    return CrtClass(W, b % W)


def odd_square_offsets(count: int, min_value: int = 0) -> OffsetTuple:
    """The first ``count`` odd squares that are >= ``min_value``."""
    if count < 1:
        raise InputError("count must be >= 1")
    m = max(1, math.isqrt(max(min_value - 1, 0)))
    if m % 2 == 0:
        m -= 1
    while m * m < min_value:
        m += 2
    top = m + 2 * (count - 1)
    if top * top >= U64_LIMIT:
        raise InputError("odd squares overflow 64 bits")
    return OffsetTuple(tuple((m + 2 * i) ** 2 for i in range(count)))
