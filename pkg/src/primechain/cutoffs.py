"""Tensor-sum cutoff functions and their I / J / L functionals.

A cutoff is F(t) = sum_a c_a prod_cell f_{a,cell}(t_cell) where every factor is
a C^1 piecewise polynomial with rational knots and coefficients.  All the
functionals reduce to one-dimensional integrals of single factors and of
products of two factors, which are computed exactly in ``Fraction``
arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from .errors import ConstructionError, InputError

SUPPORT_CAP = Fraction(1, 10)


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _poly_eval(c, u):
    acc = 0
    for a in reversed(c):
        acc = acc * u + a
    return acc


def _poly_deriv(c):
    return tuple(k * c[k] for k in range(1, len(c))) or (Fraction(0),)


def _poly_shift(c, s):
    """Coefficients of p(u + s) given those of p(u)."""
    out = [Fraction(0)] * len(c)
    for k in range(len(c) - 1, -1, -1):
        # Horner: out = out * (u + s) + c[k]
        nxt = [Fraction(0)] * len(c)
        for i, v in enumerate(out):
            if v:
                nxt[i] += v * s
                if i + 1 < len(c):
                    nxt[i + 1] += v
        nxt[0] += c[k]
        out = nxt
    return tuple(out)


def _poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _poly_integral(c, h):
    """Integral of p(u) over [0, h]."""
    return sum(a * h ** (k + 1) / (k + 1) for k, a in enumerate(c))


@dataclass(frozen=True)
class BasisFunction:
    """Compactly supported C^1 piecewise polynomial on [0, inf).

    ``knots`` run from 0 to the support end; piece i lives on
    [knots[i], knots[i+1]] with coefficients in the local variable
    u = t - knots[i] (ascending powers).  The function vanishes beyond the
    last knot, so value and slope must both reach zero there.
    """

    knots: tuple[Fraction, ...]
    coeffs: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        knots = tuple(as_fraction(x) for x in self.knots)
        coeffs = tuple(tuple(as_fraction(a) for a in c) for c in self.coeffs)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "coeffs", coeffs)
        if len(knots) < 2 or knots[0] != 0:
            raise ConstructionError("knots must start at 0 and contain at least one piece")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise ConstructionError("knots must be strictly increasing")
        if len(coeffs) != len(knots) - 1:
            raise ConstructionError("need one coefficient row per piece")
        for i in range(len(coeffs)):
            h = knots[i + 1] - knots[i]
            end_v = _poly_eval(coeffs[i], h)
            end_d = _poly_eval(_poly_deriv(coeffs[i]), h)
            if i + 1 < len(coeffs):
                nv, nd = coeffs[i + 1][0], _poly_deriv(coeffs[i + 1])[0]
            else:
                nv = nd = 0
            if end_v != nv or end_d != nd:
                raise ConstructionError(f"not C^1 at t={knots[i + 1]}")

    @classmethod
    def polynomial(cls, coeffs: Sequence, support_end) -> "BasisFunction":
        """Single piece p(t) on [0, support_end] (ascending powers of t)."""
        return cls((0, as_fraction(support_end)), (tuple(coeffs),))

    @classmethod
    def hermite(cls, knots: Sequence, values: Sequence, slopes: Sequence) -> "BasisFunction":
        """Piecewise cubic Hermite interpolant; C^1 by construction."""
        knots = [as_fraction(x) for x in knots]
        vals = [as_fraction(x) for x in values]
        slps = [as_fraction(x) for x in slopes]
        rows = []
        for i in range(len(knots) - 1):
            h = knots[i + 1] - knots[i]
            y0, y1, m0, m1 = vals[i], vals[i + 1], slps[i], slps[i + 1]
            c2 = (3 * (y1 - y0) / h - 2 * m0 - m1) / h
            c3 = (2 * (y0 - y1) / h + m0 + m1) / (h * h)
            rows.append((y0, m0, c2, c3))
        return cls(tuple(knots), tuple(rows))

    @property
    def support_end(self) -> Fraction:
        return self.knots[-1]

    @cached_property
    def integral(self) -> Fraction:
        return sum(_poly_integral(c, b - a) for c, a, b in zip(self.coeffs, self.knots, self.knots[1:]))

    @cached_property
    def _float_tables(self):
        x = np.array([float(k) for k in self.knots])
        deg = max(len(c) for c in self.coeffs)
        C = np.zeros((len(self.coeffs), deg))
        for i, c in enumerate(self.coeffs):
            C[i, : len(c)] = [float(a) for a in c]
        D = C[:, 1:] * np.arange(1, deg)
        return x, C, D

    def _eval(self, t, table):
        x, C, D = self._float_tables
        M = C if table == 0 else D
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(x, t, side="right") - 1, 0, len(x) - 2)
        u = t - x[i]
        acc = np.zeros_like(u)
        for k in range(M.shape[1] - 1, -1, -1):
            acc = acc * u + M[i, k]
        inside = (t >= 0) & (t <= x[-1])
        out = np.where(inside, acc, 0.0)
        return out if out.ndim else float(out)

    def __call__(self, t):
        return self._eval(t, 0)

    def deriv(self, t):
        return self._eval(t, 1)

    def scaled(self, theta) -> "BasisFunction":
        """t -> f(t / theta)."""
        th = as_fraction(theta)
        if th <= 0:
            raise InputError("theta must be positive")
        rows = tuple(tuple(a / th**k for k, a in enumerate(c)) for c in self.coeffs)
        return BasisFunction(tuple(k * th for k in self.knots), rows)

    def times(self, c) -> "BasisFunction":
        c = as_fraction(c)
        return BasisFunction(self.knots, tuple(tuple(a * c for a in r) for r in self.coeffs))

    def _piece_at(self, a: Fraction) -> int:
        for i in range(len(self.knots) - 1):
            if self.knots[i] <= a < self.knots[i + 1]:
                return i
        raise ValueError(a)


@lru_cache(maxsize=65536)
def inner(f: BasisFunction, g: BasisFunction) -> Fraction:
    """Exact integral of f(t) g(t) over [0, inf)."""
    end = min(f.support_end, g.support_end)
    cuts = sorted({k for k in f.knots + g.knots if k < end} | {end})
    total = Fraction(0)
    for a, b in zip(cuts, cuts[1:]):
        i, j = f._piece_at(a), g._piece_at(a)
        pf = _poly_shift(f.coeffs[i], a - f.knots[i])
        pg = _poly_shift(g.coeffs[j], a - g.knots[j])
        total += _poly_integral(_poly_mul(pf, pg), b - a)
    return total


Cell = tuple[int, int]


@dataclass(frozen=True)
class TensorSumF:
    """F(t) = sum_a coefs[a] * prod_c terms[a][c](t_c) over the listed cells.

    Every term must keep the sum over cells of its support ends within
    ``support_cap`` (1/10 unless a caller relaxes it for experiments).
    """

    cells: tuple[Cell, ...]
    terms: tuple[tuple[BasisFunction, ...], ...]
    coefs: tuple[Fraction, ...] = ()
    support_cap: Fraction = SUPPORT_CAP
    _validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        cells = tuple((int(i), int(j)) for i, j in self.cells)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "terms", tuple(tuple(t) for t in self.terms))
        coefs = tuple(as_fraction(c) for c in self.coefs) or (Fraction(1),) * len(self.terms)
        object.__setattr__(self, "coefs", coefs)
        object.__setattr__(self, "support_cap", as_fraction(self.support_cap))
        if not self.terms:
            raise ConstructionError("a cutoff needs at least one term")
        if len(set(cells)) != len(cells):
            raise ConstructionError("cells must be distinct")
        if len(coefs) != len(self.terms):
            raise ConstructionError("one coefficient per term")
        for a, term in enumerate(self.terms):
            if len(term) != len(cells):
                raise ConstructionError(f"term {a} has {len(term)} factors for {len(cells)} cells")
            s = sum(f.support_end for f in term)
            if s > self.support_cap:
                raise ConstructionError(f"term {a}: support ends sum to {s} > {self.support_cap}")
        if self._validate and quadratic_mass(self) == 0:
            raise ConstructionError("cutoff is identically zero")

    @property
    def k(self) -> int:
        return len(self.cells)

    def index(self, cell) -> int:
        return self.cells.index(tuple(cell))

    def support_end(self, cell) -> Fraction:
        c = self.index(cell)
        return max(t[c].support_end for t in self.terms)

    def __call__(self, points) -> np.ndarray:
        """Evaluate F at an (n, k) array of points."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(x.shape[0])
        for coef, term in zip(self.coefs, self.terms):
            acc = np.full(x.shape[0], float(coef))
            for c, f in enumerate(term):
                acc *= f(x[:, c])
            out += acc
        return out

    def scaled_amplitude(self, c) -> "TensorSumF":
        c = as_fraction(c)
        return TensorSumF(self.cells, self.terms, tuple(a * c for a in self.coefs), self.support_cap)


@dataclass(frozen=True)
class _Moments:
    ints: list  # ints[a][c] = integral of factor
    gram: dict  # gram[(a, b)][c] = inner product of factors
    full: dict  # full[(a, b)] = product of gram[(a, b)] over all cells


def _moments(F: TensorSumF) -> _Moments:
    ints = [[f.integral for f in term] for term in F.terms]
    gram, full = {}, {}
    A = len(F.terms)
    for a in range(A):
        for b in range(a, A):
            row = [inner(f, g) for f, g in zip(F.terms[a], F.terms[b])]
            gram[(a, b)] = gram[(b, a)] = row
            full[(a, b)] = full[(b, a)] = math.prod(row)
    return _Moments(ints, gram, full)


def _prod_except(m: _Moments, key, skip) -> Fraction:
    row = m.gram[key]
    den = math.prod(row[c] for c in skip)
    if den:
        return m.full[key] / den
    return math.prod((v for c, v in enumerate(row) if c not in skip), start=Fraction(1))


def I_functional(F: TensorSumF) -> Fraction:
    """Integral of F over [0, inf)^k."""
    return sum((coef * math.prod(f.integral for f in term) for coef, term in zip(F.coefs, F.terms)),
               Fraction(0))


def quadratic_mass(F: TensorSumF) -> Fraction:
    """Integral of F^2."""
    m = _moments(F)
    A = len(F.terms)
    return sum((F.coefs[a] * F.coefs[b] * m.full[(a, b)] for a in range(A) for b in range(A)),
               Fraction(0))


def J_functional(F: TensorSumF, cell, moments: _Moments | None = None) -> Fraction:
    """Integral over the other coordinates of (integral of F in ``cell``)^2."""
    m = moments or _moments(F)
    c = F.index(cell)
    A = len(F.terms)
    total = Fraction(0)
    for a in range(A):
        for b in range(A):
            lead = m.ints[a][c] * m.ints[b][c]
            if lead:
                total += F.coefs[a] * F.coefs[b] * lead * _prod_except(m, (a, b), (c,))
    return total


def L_functional(F: TensorSumF, cell1, cell2, moments: _Moments | None = None) -> Fraction:
    """As J but with the double integral over two distinct cells squared."""
    m = moments or _moments(F)
    c1, c2 = F.index(cell1), F.index(cell2)
    if c1 == c2:
        raise InputError("L needs two distinct cells")
    A = len(F.terms)
    total = Fraction(0)
    for a in range(A):
        for b in range(A):
            lead = m.ints[a][c1] * m.ints[a][c2] * m.ints[b][c1] * m.ints[b][c2]
            if lead:
                total += F.coefs[a] * F.coefs[b] * lead * _prod_except(m, (a, b), (c1, c2))
    return total


@dataclass(frozen=True)
class FunctionalTable:
    I: Fraction
    Q: Fraction
    J: dict
    L: dict

    def to_dict(self) -> dict:
        return {
            "I": float(self.I),
            "I_squared_norm": float(self.Q),
            "J": {f"{c[0]},{c[1]}": float(v) for c, v in self.J.items()},
            "L": {f"{a[0]},{a[1]}|{b[0]},{b[1]}": float(v) for (a, b), v in self.L.items()},
        }


def _pair_list(F: TensorSumF, pairs):
    if pairs == "all":
        return [(a, b) for i, a in enumerate(F.cells) for b in F.cells[i + 1 :]]
    if pairs == "within-block":
        return [(a, b) for i, a in enumerate(F.cells) for b in F.cells[i + 1 :] if a[0] == b[0]]
    return [(tuple(a), tuple(b)) for a, b in pairs]


def functional_table(F: TensorSumF, pairs: str | Sequence = "all", exact: bool = True) -> FunctionalTable:
    """I, int F^2, every J, and L over ``pairs`` ("all", "within-block" or a list).

    With ``exact=False`` the one-dimensional integrals stay exact but the
    multi-dimensional assembly runs in float64 (fsum), which is far cheaper
    for cutoffs with many terms.
    """
    pairs = _pair_list(F, pairs)
    m = _moments(F)
    A = len(F.terms)
    if exact:
        I = I_functional(F)
        Q = sum((F.coefs[a] * F.coefs[b] * m.full[(a, b)] for a in range(A) for b in range(A)), Fraction(0))
        J = {c: J_functional(F, c, m) for c in F.cells}
        L = {(a, b): L_functional(F, a, b, m) for a, b in pairs}
        return FunctionalTable(I, Q, J, L)

    co = np.array([float(c) for c in F.coefs])
    ints = np.array([[float(v) for v in row] for row in m.ints])
    G = np.array([[[float(v) for v in m.gram[(a, b)]] for b in range(A)] for a in range(A)])
    cc = np.outer(co, co)

    def prod_except(skip):
        keep = [c for c in range(F.k) if c not in skip]
        return np.prod(G[:, :, keep], axis=2) if keep else np.ones((A, A))

    I = math.fsum(co * np.prod(ints, axis=1))
    Q = math.fsum((cc * prod_except(())).ravel())
    J = {}
    for c, cell in enumerate(F.cells):
        J[cell] = math.fsum((cc * np.outer(ints[:, c], ints[:, c]) * prod_except((c,))).ravel())
    L = {}
    for a, b in pairs:
        c1, c2 = F.index(a), F.index(b)
        x = ints[:, c1] * ints[:, c2]
        L[(a, b)] = math.fsum((cc * np.outer(x, x) * prod_except((c1, c2))).ravel())
    return FunctionalTable(I, Q, J, L)


def normalized(F: TensorSumF) -> TensorSumF:
    """Rescale F so that the integral of F equals the integral of F^2.

    I is linear in F while J and L are quadratic, so J/I and L/I depend on
    the amplitude of F.  Under this normalisation I coincides with the
    quadratic mass, the ratios become amplitude-free, and products of
    normalised blocks keep the normalisation.
    """
    I = I_functional(F)
    if I <= 0:
        raise ConstructionError("normalisation needs a positive integral")
    return F.scaled_amplitude(I / quadratic_mass(F))


def _profile(J: int, s: Fraction, pieces: int, decay: float) -> BasisFunction:
    """Hermite interpolant of (1 - t/s)^2 / (1 + decay*J*t) on [0, s]."""
    sf = float(s)
    a = decay * J

    def g(t):
        return (1 - t / sf) ** 2 / (1 + a * t)

    def dg(t):
        return -2 * (1 - t / sf) / sf / (1 + a * t) - a * (1 - t / sf) ** 2 / (1 + a * t) ** 2

    knots = [s * Fraction(i, pieces) for i in range(pieces + 1)]
    vals = [Fraction(g(float(x))).limit_denominator(10**6) for x in knots[:-1]] + [0]
    slopes = [Fraction(dg(float(x))).limit_denominator(10**6) for x in knots[:-1]] + [0]
    return BasisFunction.hermite(knots, vals, slopes)


def maynard_basis(J: int, long_share=Fraction(1, 2), pieces: int = 4,
                  balanced: bool = True, decay: float = 1.0) -> TensorSumF:
    """Symmetric tensor-sum cutoff on the cells (0, 0) ... (0, J-1).

    Term m gives cell m a long support of length long_share/10 and every
    other cell a short support, so the boxes sum to exactly 1/10 and
    together cover the corners of the simplex {sum t <= 1/10}.  An optional
    balanced term (every cell on [0, 1/(10J)]) fills the centre.  Profiles
    are C^1 cubic interpolants of a truncated 1/(1 + decay*J*t).  The result
    is normalised (see ``normalized``).
    """
    if J < 2:
        raise InputError("maynard_basis needs J >= 2")
    share = as_fraction(long_share)
    if not 0 < share < 1:
        raise InputError(f"long_share must lie in (0, 1), got {long_share}")
    if pieces < 1:
        raise InputError("pieces must be >= 1")
    if not decay >= 0:
        raise InputError("decay must be >= 0")
    s_long = share * SUPPORT_CAP
    s_short = (1 - share) * SUPPORT_CAP / (J - 1)
    long_f = _profile(J, s_long, pieces, decay)
    short_f = _profile(J, s_short, pieces, decay)
    terms = [tuple(long_f if c == m else short_f for c in range(J)) for m in range(J)]
    if balanced:
        terms.append((_profile(J, SUPPORT_CAP / J, pieces, decay),) * J)
    cells = tuple((0, j) for j in range(J))
    return normalized(TensorSumF(cells, tuple(terms)))


def single_bump(cell=(0, 0), s=SUPPORT_CAP) -> TensorSumF:
    """Normalised one-cell cutoff (1 - t/s)^2 on [0, s]."""
    s = as_fraction(s)
    f = BasisFunction.polynomial((1, -2 / s, 1 / s**2), s)
    return normalized(TensorSumF((cell,), ((f,),)))


def scaled_product(blocks: Sequence[TensorSumF], thetas: Sequence) -> TensorSumF:
    """F(t) = prod_i F_i(t_{i,.} / theta_i) over the concatenated cells.

    Cells of block i are relabelled (i, j) for j in the block's cell order.
    """
    if len(blocks) != len(thetas) or not blocks:
        raise InputError("need one theta per block and at least one block")
    ths = [as_fraction(t) for t in thetas]
    if any(t <= 0 for t in ths) or sum(ths) > 1:
        raise InputError(f"thetas must be positive with sum <= 1, got {thetas}")
    cells = tuple((i, j) for i, blk in enumerate(blocks) for j in range(blk.k))
    scaled = [[tuple(f.scaled(th) for f in term) for term in blk.terms] for blk, th in zip(blocks, ths)]
    terms, coefs = [], []
    for combo in product(*[range(len(b.terms)) for b in blocks]):
        terms.append(sum((scaled[i][a] for i, a in enumerate(combo)), ()))
        coefs.append(math.prod(blocks[i].coefs[a] for i, a in enumerate(combo)))
    cap = max(b.support_cap for b in blocks)
    return TensorSumF(cells, tuple(terms), tuple(coefs), cap)


@dataclass(frozen=True)
class BasisRatios:
    J: int
    ratio_J: float  # min over cells of J_c / I
    ratio_L: float  # max over pairs of L / I
    target_J: float  # log J / J
    target_L: float  # (log J / J)^2

    @property
    def c(self) -> float:
        return self.ratio_J / self.target_J

    @property
    def C(self) -> float:
        return self.ratio_L / self.target_L

    def to_dict(self) -> dict:
        return {"J": self.J, "J_over_I": self.ratio_J, "L_over_I": self.ratio_L,
                "target_J": self.target_J, "target_L": self.target_L,
                "c": self.c, "C": self.C}


def basis_ratios(F: TensorSumF) -> BasisRatios:
    """Measured J/I and L/I for a single-block cutoff against log J / J."""
    t = functional_table(F, exact=False)
    J = F.k
    target = math.log(J) / J
    return BasisRatios(
        J,
        float(min(t.J.values()) / t.I),
        float(max(t.L.values()) / t.I) if t.L else 0.0,
        target,
        target**2,
    )
