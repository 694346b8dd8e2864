"""Sieve weights w(n) built from a tensor-sum cutoff, the probability measure
they induce on (N, 2N], and empirical checks of the first/second moment
asymptotics.

The divisor sum inside w(n) factorises over cells:

    sum_d lambda_d = sum_a c_a prod_cell S_{a,cell}(n),
    S_{a,cell}(n) = sum_{d | n + h_cell} mu(d) f'_{a,cell}(log d / log N),

with d running over squarefree integers coprime to W below N^{support end}.
Each S is accumulated for a whole residue class at once by striding over
the multiples of every admissible d (``kernels.accumulate``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from . import kernels
from ._accel import map_ordered, split_range, worker_count
from .admissibility import CrtClass, OffsetTuple, is_admissible, primitive_class
from .cutoffs import (
    TensorSumF,
    as_fraction,
    functional_table,
    maynard_basis,
    scaled_product,
    single_bump,
)
from .errors import DegenerateMeasureError, InputError
from .prime_engine import U64_LIMIT, _sieve_bool, factorize, mobius_table


@dataclass(frozen=True)
class SieveGrid:
    """Blocks i = 0..I-1 of J_i cells each, with one offset per cell.

    The flattened offsets (block by block) must be strictly increasing and
    admissible.  ``thetas`` are the block scales, summing to at most 1.
    """

    J: tuple[int, ...]
    offsets: tuple[tuple[int, ...], ...]
    thetas: tuple[Fraction, ...] = ()

    def __post_init__(self):
        J = tuple(int(x) for x in self.J)
        offs = tuple(tuple(int(h) for h in blk) for blk in self.offsets)
        ths = tuple(as_fraction(t) for t in self.thetas) or (Fraction(1, len(J)),) * len(J)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "offsets", offs)
        object.__setattr__(self, "thetas", ths)
        if not J or any(j < 1 for j in J):
            raise InputError(f"J must be a non-empty list of positive sizes, got {J}")
        if [len(b) for b in offs] != list(J):
            raise InputError("offsets must have J_i entries in block i")
        if len(ths) != len(J) or any(t <= 0 for t in ths) or sum(ths) > 1:
            raise InputError(f"thetas must be positive, one per block, with sum <= 1: {self.thetas}")
        flat = OffsetTuple(sum(offs, ()))
        if not is_admissible(flat).admissible:
            raise InputError(f"grid offsets {flat.offsets} are not admissible")

    @classmethod
    def from_pool(cls, pool: Sequence[int], J: Sequence[int], thetas=()) -> "SieveGrid":
        """Fill the blocks with consecutive entries of an increasing pool."""
        pool = list(pool)
        need = sum(J)
        if len(pool) < need:
            raise InputError(f"pool has {len(pool)} offsets, grid needs {need}")
        blocks, pos = [], 0
        for j in J:
            blocks.append(tuple(pool[pos : pos + j]))
            pos += j
        return cls(tuple(J), tuple(blocks), tuple(thetas))

    @property
    def cells(self) -> tuple[tuple[int, int], ...]:
        return tuple((i, j) for i, n in enumerate(self.J) for j in range(n))

    @property
    def flat(self) -> OffsetTuple:
        return OffsetTuple(sum(self.offsets, ()))

    @property
    def k(self) -> int:
        return sum(self.J)

    def offset(self, cell) -> int:
        i, j = cell
        return self.offsets[i][j]

    def to_dict(self) -> dict:
        return {"J": list(self.J), "offsets": [list(b) for b in self.offsets],
                "theta": [float(t) for t in self.thetas]}


def doubling_schedule(blocks: int) -> tuple[tuple[int, ...], tuple[Fraction, ...]]:
    """Preset block sizes J_i = 2^(2^i) with scales theta_i = 2^-i, i = 1..blocks.

    Only the first two blocks (J = 4, 16) are practical on a desk.
    """
    if blocks < 1:
        raise InputError("need at least one block")
    return (tuple(2 ** (2**i) for i in range(1, blocks + 1)),
            tuple(Fraction(1, 2**i) for i in range(1, blocks + 1)))


def block_cutoff(J: int, **basis) -> TensorSumF:
    return maynard_basis(J, **basis) if J >= 2 else single_bump()


def default_cutoff(grid: SieveGrid, **basis) -> TensorSumF:
    """Product of per-block cutoffs, block i rescaled by theta_i."""
    return scaled_product([block_cutoff(j, **basis) for j in grid.J], grid.thetas)


@dataclass(frozen=True)
class SieveConfig:
    grid: SieveGrid
    N: int
    z: int = 7
    crt: CrtClass = field(init=False)

    def __post_init__(self):
        if self.N < 2:
            raise InputError("N must be >= 2")
        if 2 * self.N + max(self.grid.flat) >= U64_LIMIT:
            raise InputError("2N + max offset overflows 64 bits")
        object.__setattr__(self, "crt", primitive_class(self.grid.flat, self.z))
        if self.N < 2 * self.W:
            raise InputError(f"N={self.N} must be at least 2W={2 * self.W}")

    @property
    def W(self) -> int:
        return self.crt.W

    @property
    def b(self) -> int:
        return self.crt.b

    @property
    def B(self) -> float:
        phi = math.prod(p - 1 for p in factorize(self.W)) if self.W > 1 else 1
        return phi / self.W * math.log(self.N)

    def class_members(self) -> tuple[int, int]:
        """(first n > N with n = b (W), count of such n <= 2N)."""
        n0 = self.N + 1 + (self.b - self.N - 1) % self.W
        return n0, (2 * self.N - n0) // self.W + 1 if n0 <= 2 * self.N else 0

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "N": self.N, "z": self.z, "W": self.W, "b": self.b,
                "B": self.B}


def _cells_of(F: TensorSumF, d) -> list[int]:
    if isinstance(d, dict):
        return [int(d[c]) for c in F.cells]
    d = [int(x) for x in d]
    if len(d) != F.k:
        raise InputError(f"need {F.k} moduli, got {len(d)}")
    return d


def lambda_weight(d, F: TensorSumF, N: int, W: int = 1) -> float:
    """prod mu(d_c) * sum_a c_a prod_c f'_{a,c}(log d_c / log N).

    Zero unless every d_c is squarefree and coprime to W.
    """
    ds = _cells_of(F, d)
    sign = 1
    for x in ds:
        if x < 1:
            raise InputError("moduli must be >= 1")
        if math.gcd(x, W) != 1:
            return 0.0
        f = factorize(x) if x > 1 else {}
        if any(e > 1 for e in f.values()):
            return 0.0
        sign *= -1 if len(f) % 2 else 1
    logN = math.log(N)
    ts = [math.log(x) / logN for x in ds]
    total = 0.0
    for coef, term in zip(F.coefs, F.terms):
        acc = float(coef)
        for f, t in zip(term, ts):
            acc *= f.deriv(t)
        total += acc
    return sign * total


def _divisor_limit(F: TensorSumF, c: int, N: int) -> int:
    s = float(max(t[c].support_end for t in F.terms))
    D = int(math.floor(N**s * (1 + 1e-12)))
    # the derivative vanishes at the support end, so boundary rounding is harmless
    return max(D, 1)


def _cell_tables(F: TensorSumF, N: int, W: int):
    """Per cell: admissible moduli d and the values mu(d) f'_{a,c}(log d/log N)."""
    logN = math.log(N)
    out = []
    for c in range(F.k):
        D = _divisor_limit(F, c, N)
        mu = mobius_table(D)
        d = np.arange(1, D + 1, dtype=np.int64)
        keep = (mu[1:] != 0) & (np.gcd(d, W) == 1)
        d = d[keep]
        t = np.log(d.astype(float)) / logN
        t[0] = 0.0
        vals = np.empty((len(F.terms), d.size))
        for a, term in enumerate(F.terms):
            vals[a] = mu[1:][keep] * term[c].deriv(t)
            if c == 0:
                vals[a] *= float(F.coefs[a])
        out.append((d, vals))
    return out


def _weights_chunk(cfg: SieveConfig, F: TensorSumF, tables, n0: int, t0: int, t1: int) -> np.ndarray:
    T = t1 - t0
    first = n0 + t0 * cfg.W
    S = np.empty((len(F.terms), F.k, T))
    for c, cell in enumerate(F.cells):
        h = cfg.grid.offset(cell)
        d, vals = tables[c]
        # n = first + t W, d | n + h  <=>  t = -(first + h) W^{-1} (mod d)
        starts = np.array([(-(first + h) * pow(cfg.W, -1, int(q))) % int(q) for q in d.tolist()],
                          dtype=np.int64)
        acc = np.zeros((len(F.terms), T))
        kernels.accumulate(acc, starts, d, vals)
        S[:, c, :] = acc
    inner = kernels.tensor_combine(S)
    return inner * inner


def sieve_weights(cfg: SieveConfig, F: TensorSumF, workers: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(n values, w(n)) for every n in (N, 2N] with n = b (W)."""
    _check_cells(cfg, F)
    n0, T = cfg.class_members()
    ns = n0 + cfg.W * np.arange(T, dtype=np.int64)
    if T == 0:
        return ns, np.zeros(0)
    tables = _cell_tables(F, cfg.N, cfg.W)
    nw = worker_count(workers)
    parts = map_ordered(lambda r: _weights_chunk(cfg, F, tables, n0, r[0], r[1]), split_range(0, T, nw), nw)
    return ns, np.concatenate(parts)


def _check_cells(cfg: SieveConfig, F: TensorSumF):
    if tuple(F.cells) != cfg.grid.cells:
        raise InputError(f"cutoff cells {F.cells} do not match grid cells {cfg.grid.cells}")


def _squarefree_divisors(m: int, W: int, limit: int):
    ps = [p for p in factorize(m) if W % p]
    out = [(1, 1)]
    for p in ps:
        out += [(d * p, -s) for d, s in out if d * p <= limit]
    return out


def sieve_weight(n: int, cfg: SieveConfig, F: TensorSumF) -> float:
    """w(n) for a single n, by factorising each n + h."""
    _check_cells(cfg, F)
    if not cfg.N < n <= 2 * cfg.N:
        raise InputError(f"n={n} outside (N, 2N]")
    if n % cfg.W != cfg.b:
        return 0.0
    logN = math.log(cfg.N)
    S = np.zeros((len(F.terms), F.k))
    for c, cell in enumerate(F.cells):
        m = n + cfg.grid.offset(cell)
        if m >= U64_LIMIT:
            raise InputError("n + h overflows 64 bits")
        for d, mu in _squarefree_divisors(m, cfg.W, _divisor_limit(F, c, cfg.N)):
            t = math.log(d) / logN
            for a, term in enumerate(F.terms):
                S[a, c] += mu * term[c].deriv(t)
    total = sum(float(coef) * math.prod(S[a]) for a, coef in enumerate(F.coefs))
    return total * total


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Probability measure on n = b (W) in (N, 2N] with density w(n) / sum w."""

    support: np.ndarray
    weights: np.ndarray
    N: int
    W: int
    b: int

    def __len__(self):
        return self.support.size

    def total(self) -> float:
        return math.fsum(self.weights)

    def measure(self, mask: np.ndarray) -> float:
        return math.fsum(self.weights[mask])


def empirical_measure(cfg: SieveConfig, F: TensorSumF, workers: int | None = None) -> EmpiricalMeasure:
    ns, w = sieve_weights(cfg, F, workers)
    total = math.fsum(w)
    if not total > 0:
        raise DegenerateMeasureError(f"all sieve weights vanish at N={cfg.N}")
    return EmpiricalMeasure(ns, w / total, cfg.N, cfg.W, cfg.b)


def prime_indicators(ns: np.ndarray, offsets: Sequence[int]) -> np.ndarray:
    """Boolean matrix P[t, c] = (ns[t] + offsets[c] is prime)."""
    if ns.size == 0:
        return np.zeros((0, len(offsets)), dtype=bool)
    lo = int(ns[0]) + min(offsets)
    hi = int(ns[-1]) + max(offsets) + 1
    table = _sieve_bool(lo, hi)
    return np.stack([table[ns - lo + h] for h in offsets], axis=1)


def block_target(J: int, theta) -> float:
    return float(theta) * math.log(J) / J if J >= 2 else 0.0


@dataclass
class EstimateReport:
    config: dict
    k: int
    sum_w: float
    predicted_w: float
    singles: dict  # cell -> (sum 1_P w, predicted, nu measure, J/I, target)
    pairs: dict  # (cell, cell) -> (sum 1_P 1_P w, predicted, nu measure, L/I, target or None)
    functionals: dict

    @property
    def ratio_w(self) -> float:
        return self.sum_w / self.predicted_w if self.predicted_w else float("nan")

    def ratio_single(self, cell) -> float:
        s = self.singles[tuple(cell)]
        return s["sum"] / s["predicted"] if s["predicted"] else float("nan")

    def ratio_pair(self, a, b) -> float:
        s = self.pairs[(tuple(a), tuple(b))]
        return s["sum"] / s["predicted"] if s["predicted"] else float("nan")

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "k": self.k,
            "sum_w": self.sum_w,
            "predicted_w": self.predicted_w,
            "ratio_w": self.ratio_w,
            "singles": [{"cell": list(c), **v, "ratio": self.ratio_single(c)} for c, v in self.singles.items()],
            "pairs": [{"cells": [list(a), list(b)], **v, "ratio": self.ratio_pair(a, b)}
                      for (a, b), v in self.pairs.items()],
            "functionals": self.functionals,
        }

    def to_rows(self) -> list[dict]:
        rows = [{"quantity": "sum_w", "empirical": self.sum_w, "predicted": self.predicted_w,
                 "ratio": self.ratio_w}]
        for c, v in self.singles.items():
            tag = f"{c[0]},{c[1]}"
            rows.append({"quantity": f"sum_P_w[{tag}]", "empirical": v["sum"], "predicted": v["predicted"],
                         "ratio": self.ratio_single(c)})
            rows.append({"quantity": f"nu_single[{tag}]", "empirical": v["nu"], "predicted": v["J_over_I"],
                         "ratio": v["nu"] / v["J_over_I"] if v["J_over_I"] else float("nan")})
        for (a, b), v in self.pairs.items():
            tag = f"{a[0]},{a[1]}|{b[0]},{b[1]}"
            rows.append({"quantity": f"sum_PP_w[{tag}]", "empirical": v["sum"], "predicted": v["predicted"],
                         "ratio": self.ratio_pair(a, b)})
            rows.append({"quantity": f"nu_pair[{tag}]", "empirical": v["nu"], "predicted": v["L_over_I"],
                         "ratio": v["nu"] / v["L_over_I"] if v["L_over_I"] else float("nan")})
        return rows


def verify_estimates(cfg: SieveConfig, F: TensorSumF, workers: int | None = None,
                     exact: bool = False) -> EstimateReport:
    """Measured moments of w against (N/W) B^-k times I, J and L.

    Reports numbers only; judging them is left to the caller.
    """
    ns, w = sieve_weights(cfg, F, workers)
    grid = cfg.grid
    offs = [grid.offset(c) for c in grid.cells]
    P = prime_indicators(ns, offs)
    tab = functional_table(F, "all", exact=exact)
    scale = cfg.N / cfg.W * cfg.B ** (-grid.k)
    sum_w = math.fsum(w)

    def nu(x):
        return x / sum_w if sum_w else 0.0

    singles = {}
    for c, cell in enumerate(grid.cells):
        s = math.fsum(w[P[:, c]])
        i = cell[0]
        singles[cell] = {
            "sum": s, "predicted": scale * float(tab.J[cell]), "nu": nu(s),
            "J_over_I": float(tab.J[cell] / tab.I),
            "target": block_target(grid.J[i], grid.thetas[i]),
        }
    pairs = {}
    for (c1, a), (c2, b) in combinations(list(enumerate(grid.cells)), 2):
        s = math.fsum(w[P[:, c1] & P[:, c2]])
        same = a[0] == b[0]
        tgt = block_target(grid.J[a[0]], grid.thetas[a[0]]) ** 2 if same else None
        pairs[(a, b)] = {
            "sum": s, "predicted": scale * float(tab.L[(a, b)]), "nu": nu(s),
            "L_over_I": float(tab.L[(a, b)] / tab.I), "target": tgt,
        }
    return EstimateReport(cfg.to_dict(), grid.k, sum_w, scale * float(tab.I), singles, pairs, tab.to_dict())
