"""Good tuples: primes p_1 < ... < p_k, all > 3, with p_i + p_j + 1 prime and
p_i not dividing p_j + 2 whenever i < j.

Extending a good tuple reduces to finding n with n, n + 2 and every
n + p_i + 1 prime, i.e. a witness for the offsets (0, 2, p_1 + 1, ..., p_k + 1).
Whether one exists below a given bound is an empirical question; ``extend``
returns ``None`` when the search comes up empty.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .admissibility import OffsetTuple, is_admissible
from .errors import InputError, InvariantViolation
from .prime_engine import U64_LIMIT, WitnessCertificate, find_witnesses, is_prime


class GoodCheck(NamedTuple):
    ok: bool
    violation: str | None = None

    def __bool__(self):
        return self.ok


def verify_good(candidate) -> GoodCheck:
    """Check every good-tuple constraint, reporting the first one that fails."""
    ps = [int(p) for p in candidate]
    if not ps:
        return GoodCheck(False, "empty tuple")
    for i, p in enumerate(ps):
        if p <= 3:
            return GoodCheck(False, f"p_{i + 1}={p} is not > 3")
        if not is_prime(p):
            return GoodCheck(False, f"p_{i + 1}={p} is not prime")
        if i and p <= ps[i - 1]:
            return GoodCheck(False, f"p_{i + 1}={p} does not exceed p_{i}={ps[i - 1]}")
    for j in range(len(ps)):
        for i in range(j):
            s = ps[i] + ps[j] + 1
            if not is_prime(s):
                return GoodCheck(False, f"p_{i + 1}+p_{j + 1}+1={s} is composite")
            if (ps[j] + 2) % ps[i] == 0:
                return GoodCheck(False, f"p_{i + 1}={ps[i]} divides p_{j + 1}+2={ps[j] + 2}")
    return GoodCheck(True)


@dataclass(frozen=True)
class GoodTuple:
    primes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "primes", tuple(int(p) for p in self.primes))
        chk = verify_good(self.primes)
        if not chk:
            raise InputError(f"not a good tuple: {chk.violation}")

    def __len__(self):
        return len(self.primes)


def extension_offsets(g) -> OffsetTuple:
    """(0, 2, p_1 + 1, ..., p_k + 1); admissible for every good tuple."""
    primes = tuple(getattr(g, "primes", g))
    t = OffsetTuple((0, 2) + tuple(p + 1 for p in primes))
    if not is_admissible(t).admissible:
        raise InvariantViolation(f"extension offsets of {primes} are not admissible")
    return t


def extend_with_certificate(g: GoodTuple, search_bound: int,
                            workers: int | None = None) -> tuple[GoodTuple | None, WitnessCertificate]:
    if search_bound <= g.primes[-1]:
        raise InputError("search_bound must exceed the largest prime of the tuple")
    offs = extension_offsets(g)
    if search_bound + offs[-1] >= U64_LIMIT:
        raise InputError("search bound overflows 64 bits")
    cert = find_witnesses(offs, g.primes[-1] + 1, search_bound + 1, max_count=1, workers=workers)
    if not cert.witnesses:
        return None, cert
    out = GoodTuple(g.primes + (cert.witnesses[0],))
    return out, cert


def extend(g: GoodTuple, search_bound: int, workers: int | None = None) -> GoodTuple | None:
    """Append the smallest n in (p_k, search_bound] that keeps the tuple good."""
    return extend_with_certificate(g, search_bound, workers)[0]


@dataclass(frozen=True)
class ChainResult:
    primes: tuple[int, ...]
    step_witnesses: tuple[int, ...]
    bound: int
    certificates: tuple[WitnessCertificate, ...] = ()

    def to_dict(self) -> dict:
        return {
            "primes": list(self.primes),
            "step_witnesses": list(self.step_witnesses),
            "bound": self.bound,
        }

    def verify(self) -> bool:
        if not verify_good(self.primes):
            return False
        if list(self.step_witnesses) != list(self.primes[1:]) or max(self.primes) > self.bound:
            return False
        # each step n made n, n + 2 and n + p_i + 1 prime for the earlier p_i
        for r, n in enumerate(self.step_witnesses, start=1):
            if not all(is_prime(n + h) for h in (0, 2) + tuple(p + 1 for p in self.primes[:r])):
                return False
        return True


def build_chain(seed: int, target_len: int, search_bound: int,
                workers: int | None = None) -> ChainResult:
    """Iterate ``extend`` from (seed,) until ``target_len`` or a failed search."""
    g = GoodTuple((seed,))
    steps, certs = [], []
    while len(g) < target_len and g.primes[-1] < search_bound:
        nxt, cert = extend_with_certificate(g, search_bound, workers)
        certs.append(cert)
        if nxt is None:
            break
        steps.append(nxt.primes[-1])
        g = nxt
    return ChainResult(g.primes, tuple(steps), int(search_bound), tuple(certs))
