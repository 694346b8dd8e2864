"""Hot inner loops, each in two flavours.

Every kernel has a loop form compiled by numba and a vectorised numpy form.
Both flavours are importable as ``numba_impl`` / ``numpy_impl`` for testing
and benchmarking; the module-level names pick one according to
``PRIMECHAIN_DISABLE_NUMBA``.  Floating-point kernels accumulate in the same
order in both flavours, so their outputs agree bit for bit.
"""
from __future__ import annotations

from types import SimpleNamespace

import numpy as np

from ._accel import USE_NUMBA, njit


def _sieve_segment_loop(lo, hi, base_primes):
    out = np.ones(hi - lo, dtype=np.bool_)
    for i in range(min(2, hi) - lo if lo < 2 else 0):
        out[i] = False
    for q in range(base_primes.shape[0]):
        p = base_primes[q]
        pp = p * p
        if pp >= hi:
            break
        start = ((lo + p - 1) // p) * p
        if start < pp:
            start = pp
        for m in range(start - lo, hi - lo, p):
            out[m] = False
    return out


def _sieve_segment_np(lo, hi, base_primes):
    out = np.ones(hi - lo, dtype=np.bool_)
    if lo < 2:
        out[: min(2, hi) - lo] = False
    for p in base_primes.tolist():
        pp = p * p
        if pp >= hi:
            break
        start = max(pp, -(-lo // p) * p)
        out[start - lo :: p] = False
    return out


def _accumulate_loop(S, starts, strides, vals):
    # S[a, t] += vals[a, q] for every t = starts[q] (mod strides[q])
    T = S.shape[1]
    for q in range(starts.shape[0]):
        step = strides[q]
        for a in range(S.shape[0]):
            v = vals[a, q]
            if v == 0.0:
                continue
            for t in range(starts[q], T, step):
                S[a, t] += v
    return S


def _accumulate_np(S, starts, strides, vals):
    for q in range(starts.shape[0]):
        st, step = int(starts[q]), int(strides[q])
        for a in range(S.shape[0]):
            v = vals[a, q]
            if v != 0.0:
                S[a, st::step] += v
    return S


def _tensor_combine_loop(S):
    # S has shape (terms, cells, T); returns sum_a prod_c S[a, c, t]
    A, K, T = S.shape
    out = np.zeros(T)
    for t in range(T):
        total = 0.0
        for a in range(A):
            acc = S[a, 0, t]
            for c in range(1, K):
                acc = acc * S[a, c, t]
            total = total + acc
        out[t] = total
    return out


def _tensor_combine_np(S):
    A, K, T = S.shape
    out = np.zeros(T)
    for a in range(A):
        acc = S[a, 0].copy()
        for c in range(1, K):
            acc *= S[a, c]
        out = out + acc
    return out


def _pattern_mask_loop(table, base, cand, offsets):
    # True where table[n - base + h] holds for every offset h
    out = np.zeros(cand.shape[0], dtype=np.bool_)
    for i in range(cand.shape[0]):
        ok = True
        for h in offsets:
            if not table[cand[i] - base + h]:
                ok = False
                break
        out[i] = ok
    return out


def _pattern_mask_np(table, base, cand, offsets):
    out = np.ones(cand.shape[0], dtype=np.bool_)
    idx = cand - base
    for h in offsets.tolist():
        out &= table[idx + h]
    return out


numpy_impl = SimpleNamespace(
    sieve_segment=_sieve_segment_np,
    accumulate=_accumulate_np,
    tensor_combine=_tensor_combine_np,
    pattern_mask=_pattern_mask_np,
)

numba_impl = SimpleNamespace(
    sieve_segment=njit(_sieve_segment_loop),
    accumulate=njit(_accumulate_loop),
    tensor_combine=njit(_tensor_combine_loop),
    pattern_mask=njit(_pattern_mask_loop),
)

_active = numba_impl if USE_NUMBA else numpy_impl

sieve_segment = _active.sieve_segment
accumulate = _active.accumulate
tensor_combine = _active.tensor_combine
pattern_mask = _active.pattern_mask
