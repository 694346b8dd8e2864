"""Finite second-moment chain selection.

A sieve measure nu on (N, 2N] is pushed forward to the events
E_{i,j} = {n : n + h_{i,j} prime}.  Per block, the Cauchy-Schwarz bound
(sum_j mu(E_ij))^2 / E[(sum_j 1_{E_ij})^2] bounds the union from below;
a greedy pass then picks one cell per block keeping the running
intersection measure positive, and explicit witnesses certify each prefix.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .admissibility import OffsetTuple, is_admissible, odd_square_offsets
from .errors import DegenerateMeasureError, InputError
from .maynard_sieve import (
    EmpiricalMeasure,
    SieveConfig,
    SieveGrid,
    default_cutoff,
    empirical_measure,
    prime_indicators,
)
from .prime_engine import WitnessCertificate, find_witnesses, is_prime

log = logging.getLogger(__name__)

Cell = tuple[int, int]


@dataclass
class EventTable:
    """Event measures under a finite probability vector.

    ``hits[t, c]`` says whether atom t lies in the event of ``cells[c]``.
    """

    weights: np.ndarray
    hits: np.ndarray
    cells: tuple[Cell, ...]
    N: int | None = None
    singles: dict = field(init=False)
    pairs: dict = field(init=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.hits = np.asarray(self.hits, dtype=bool)
        self.cells = tuple((int(i), int(j)) for i, j in self.cells)
        if self.hits.shape != (self.weights.size, len(self.cells)):
            raise InputError("hits must have one row per atom and one column per cell")
        if (self.weights < 0).any():
            raise InputError("weights must be non-negative")
        self._col = {c: k for k, c in enumerate(self.cells)}
        self.singles = {c: self.measure([c]) for c in self.cells}
        self.pairs = {}
        for a in self.cells:
            for b in self.cells:
                if a < b and a[0] == b[0]:
                    self.pairs[(a, b)] = self.measure([a, b])

    @property
    def blocks(self) -> list[int]:
        return sorted({i for i, _ in self.cells})

    def block_cells(self, i: int) -> list[Cell]:
        return sorted(c for c in self.cells if c[0] == i)

    def measure(self, cells: Sequence[Cell]) -> float:
        """mu of the intersection of the events of ``cells`` (all atoms if empty)."""
        mask = np.ones(self.weights.size, dtype=bool)
        for c in cells:
            mask &= self.hits[:, self._col[tuple(c)]]
        return math.fsum(self.weights[mask])

    def union_measure(self, cells: Sequence[Cell]) -> float:
        mask = np.zeros(self.weights.size, dtype=bool)
        for c in cells:
            mask |= self.hits[:, self._col[tuple(c)]]
        return math.fsum(self.weights[mask])

    def pair(self, a: Cell, b: Cell) -> float:
        key = (min(a, b), max(a, b))
        return self.pairs[key] if key in self.pairs else self.measure([a, b])


def pushforward(nu: EmpiricalMeasure, grid: SieveGrid) -> EventTable:
    """Event table of phi(n) = {cells with n + h prime} under nu."""
    offs = [grid.offset(c) for c in grid.cells]
    hits = prime_indicators(nu.support, offs)
    return EventTable(nu.weights, hits, grid.cells, nu.N)


@dataclass(frozen=True)
class BlockBound:
    bound: float
    exact: float
    first_moment: float
    second_moment: float


def block_lower_bound(table: EventTable, i: int) -> BlockBound:
    """Cauchy-Schwarz lower bound for the measure of the union over block i."""
    cells = table.block_cells(i)
    if not cells:
        raise InputError(f"block {i} not present")
    first = math.fsum(table.singles[c] for c in cells)
    cross = math.fsum(table.pair(a, b) for a in cells for b in cells if a != b)
    second = first + cross
    bound = first * first / second if second > 0 else 0.0
    return BlockBound(bound, table.union_measure(cells), first, second)


@dataclass(frozen=True)
class GreedyStrategy:
    # leave enough later blocks to reach the requested depth
    reserve_blocks: bool = True
    # a cell extends the chain only if its intersection measure exceeds this
    min_measure: float = 0.0


def select_chain(tables: Sequence[EventTable], depth: int,
                 strategy: GreedyStrategy = GreedyStrategy()) -> list[Cell]:
    """Greedy cells in increasing blocks maximising the running intersection.

    ``tables`` are ordered by increasing N; the largest is consulted first and
    smaller ones only when no candidate has positive measure there.  Ties go
    to the smallest block, then the smallest j.
    """
    if depth < 1:
        raise InputError("depth must be >= 1")
    if not tables:
        raise InputError("need at least one event table")
    blocks = sorted(set().union(*(t.blocks for t in tables)))
    chain: list[Cell] = []
    last = -1
    while len(chain) < depth:
        avail = [b for b in blocks if b > last]
        if strategy.reserve_blocks:
            room = len(avail) - (depth - len(chain) - 1)
            avail = avail[: max(room, 1)]
        pick = None
        for table in reversed(tables):
            best, best_val = None, strategy.min_measure
            for b in avail:
                for c in table.block_cells(b):
                    v = table.measure(chain + [c])
                    if v > best_val:
                        best, best_val = c, v
            if best is not None:
                pick = best
                break
        if pick is None:
            break
        chain.append(pick)
        last = pick[0]
    return chain


@dataclass(frozen=True)
class HalfSumset:
    a: tuple[int, ...]
    b: tuple[int, ...]
    bound: int

    def matrix(self) -> list[tuple[int, int, int, bool]]:
        """(i, j, a_i + b_j, prime?) for 1 <= i < j, 1-based."""
        return [(i, j, self.a[i - 1] + self.b[j - 1], is_prime(self.a[i - 1] + self.b[j - 1]))
                for j in range(1, len(self.b) + 1) for i in range(1, min(j, len(self.a) + 1))]

    def verify(self) -> bool:
        inc = all(y > x for x, y in zip(self.a, self.a[1:])) and all(y > x for x, y in zip(self.b, self.b[1:]))
        return inc and all(ok for *_, ok in self.matrix())

    def to_dict(self) -> dict:
        return {"a": list(self.a), "b": list(self.b), "bound": self.bound,
                "matrix": [[i, j, s, ok] for i, j, s, ok in self.matrix()]}

    def to_rows(self) -> list[dict]:
        return [{"i": i, "j": j, "a_i": self.a[i - 1], "b_j": self.b[j - 1], "sum": s, "prime": ok}
                for i, j, s, ok in self.matrix()]


def build_half_sumset(chain_offsets, count_b: int, search_bound: int,
                      workers: int | None = None) -> HalfSumset:
    """b_1 = 1, then the smallest b_j > b_{j-1} with a_i + b_j prime for all i < j.

    Stops early, returning the partial list, if some b_j is not found below
    ``search_bound``.
    """
    a = chain_offsets if isinstance(chain_offsets, OffsetTuple) else OffsetTuple(tuple(chain_offsets))
    if count_b < 0:
        raise InputError("count_b must be >= 0")
    if count_b > len(a):
        raise InputError(f"count_b={count_b} needs at least that many a's, got {len(a)}")
    if not is_admissible(a).admissible:
        raise InputError(f"{a.offsets} is not admissible")
    b = [1]
    for j in range(2, count_b + 2):
        if b[-1] + 1 >= search_bound:
            break
        cert = find_witnesses(a.offsets[: j - 1], b[-1] + 1, search_bound, max_count=1, workers=workers)
        if not cert.witnesses:
            break
        b.append(cert.witnesses[0])
    return HalfSumset(a.offsets, tuple(b), int(search_bound))


@dataclass(frozen=True)
class ChainLink:
    cell: Cell
    offset: int
    measure: float


@dataclass(frozen=True)
class ChainCertificate:
    pool: tuple[int, ...]
    grid: dict
    N_schedule: tuple[int, ...]
    chain: tuple[ChainLink, ...]
    prefix_witnesses: tuple[WitnessCertificate, ...]

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(link.offset for link in self.chain)

    def to_dict(self) -> dict:
        return {
            "pool": list(self.pool),
            "grid": self.grid,
            "N_schedule": list(self.N_schedule),
            "chain": [{"cell": list(l.cell), "offset": l.offset, "measure": l.measure} for l in self.chain],
            "prefix_witnesses": [c.to_dict() for c in self.prefix_witnesses],
        }

    def verify(self) -> bool:
        offs = self.offsets
        if any(b <= a for a, b in zip(offs, offs[1:])):
            return False
        if len(self.prefix_witnesses) != len(offs):
            return False
        for r, cert in enumerate(self.prefix_witnesses, start=1):
            if tuple(cert.offsets) != offs[:r] or not cert.witnesses or not cert.verify():
                return False
        return True


def pool_offsets(pool, count: int) -> OffsetTuple:
    """The first ``count`` entries of a pool: "odd-squares" or an explicit list."""
    if isinstance(pool, str):
        if pool != "odd-squares":
            raise InputError(f"unknown pool {pool!r}")
        return odd_square_offsets(count)
    vals = tuple(sorted(int(h) for h in pool))
    if len(vals) < count:
        raise InputError(f"pool has {len(vals)} entries, need {count}")
    return OffsetTuple(vals[:count])


def run_pipeline(pool, J: Sequence[int], thetas: Sequence, N_schedule: Sequence[int], depth: int,
                 z: int = 7, basis: dict | None = None, min_witnesses: int = 1,
                 witness_bound: int | None = None, strategy: GreedyStrategy = GreedyStrategy(),
                 workers: int | None = None) -> ChainCertificate:
    """Sieve measure -> event tables -> greedy chain -> witnessed prefixes."""
    offs = pool_offsets(pool, sum(J))
    if not is_admissible(offs).admissible:
        raise InputError(f"pool prefix {offs.offsets} is not admissible")
    grid = SieveGrid.from_pool(offs.offsets, J, thetas)
    F = default_cutoff(grid, **(basis or {}))
    schedule = tuple(sorted(int(n) for n in N_schedule))
    tables = []
    for N in schedule:
        cfg = SieveConfig(grid, N, z)
        try:
            nu = empirical_measure(cfg, F, workers)
        except DegenerateMeasureError as exc:
            log.warning("skipping N=%d: %s", N, exc)
            continue
        tables.append(pushforward(nu, grid))
    if not tables:
        raise DegenerateMeasureError("every N in the schedule gave a degenerate measure")
    cells = select_chain(tables, depth, strategy)
    top = tables[-1]
    links = tuple(ChainLink(c, grid.offset(c), top.measure(cells[: r + 1])) for r, c in enumerate(cells))
    # witnesses are sought in the window of the largest N first, then from 1
    lo, hi = top.N + 1, (witness_bound if witness_bound is not None else 2 * top.N + 1)
    certs = []
    for r in range(len(links)):
        prefix = tuple(l.offset for l in links[: r + 1])
        cert = find_witnesses(prefix, lo, hi, max_count=min_witnesses, workers=workers) if lo < hi else None
        if cert is None or len(cert.witnesses) < min_witnesses:
            cert = find_witnesses(prefix, 1, hi, max_count=min_witnesses, workers=workers)
        certs.append(cert)
    certs = tuple(certs)
    return ChainCertificate(offs.offsets, grid.to_dict(), schedule, links, certs)
