"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (see ``conftest.py``), printed at the end
of the run.  ``python3 tests/test_acceptance.py`` runs only this module.
"""
import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from oracles import (
    admissible_by_scan,
    brute_good_chain,
    brute_half_sumset,
    monte_carlo,
    random_event_table,
    random_tensor_sum,
    trial_division,
)
from primechain.admissibility import is_admissible, odd_square_offsets
from primechain.chain_selector import block_lower_bound
from primechain.cli import main
from primechain.cutoffs import (
    BasisFunction,
    I_functional,
    TensorSumF,
    basis_ratios,
    functional_table,
    maynard_basis,
    normalized,
    scaled_product,
)
from primechain.maynard_sieve import SieveConfig, SieveGrid, default_cutoff, verify_estimates
from primechain.prime_engine import is_prime

RESULTS = {}


def record(num, ok, detail):
    RESULTS[num] = (bool(ok), detail)
    assert ok, detail


def _cli(*argv):
    return main([str(a) for a in argv])


def test_criterion_1_good_tuple_chain(tmp_path, capsys):
    out = tmp_path / "chain.json"
    t0 = time.perf_counter()
    code = _cli("goodtuple", "build", "--seed", "5", "--len", "4", "--bound", "1e6", "--out", out)
    elapsed = time.perf_counter() - t0
    capsys.readouterr()
    ps = json.loads(out.read_text())["primes"]
    matrix_ok = all(trial_division(ps[i] + ps[j] + 1) and (ps[j] + 2) % ps[i]
                    for j in range(len(ps)) for i in range(j))
    oracle = brute_good_chain(5, 4, 10**6)
    ok = code == 0 and len(ps) == 4 and matrix_ok and ps[:3] == [5, 11, 17] == oracle[:3] \
        and ps == oracle and elapsed < 10
    record(1, ok, f"chain={ps} oracle={oracle} matrix_ok={matrix_ok} time={elapsed:.2f}s")


def test_criterion_2_admissibility_suite():
    cases = [((0, 2), True), ((0, 2, 4), False), ((0, 2, 6, 8, 12), True),
             (odd_square_offsets(50).offsets, True)]
    t0 = time.perf_counter()
    got = [is_admissible(t).admissible for t, _ in cases]
    elapsed = time.perf_counter() - t0
    oracle = [admissible_by_scan(t) for t, _ in cases]
    want = [e for _, e in cases]
    mod3 = is_admissible((0, 2, 4)).per_prime[3].avoided is None
    ok = got == want == oracle and mod3 and elapsed < 1
    record(2, ok, f"got={got} oracle={oracle} time={elapsed:.3f}s")


def test_criterion_3_sieve_consistency():
    grid = SieveGrid((2,), ((0, 2),))
    cfg = SieveConfig(grid, 10**7, z=7)
    F = default_cutoff(grid)
    t0 = time.perf_counter()
    rep = verify_estimates(cfg, F)
    elapsed = time.perf_counter() - t0
    ratios = {"sum_w": rep.ratio_w}
    ratios.update({f"P{c}": rep.ratio_single(c) for c in grid.cells})
    ok = all(0.5 <= r <= 2.0 for r in ratios.values()) and elapsed < 300
    detail = ", ".join(f"{k}={v:.4g}" for k, v in ratios.items()) + f" time={elapsed:.1f}s"
    record(3, ok, detail)


def test_criterion_4_functional_oracles():
    bump = BasisFunction.polynomial((1, -20, 100), Fraction(1, 10))
    exact_example = I_functional(TensorSumF(((0, 0),), ((bump,),))) == Fraction(1, 30)
    worst, checks = 0.0, 0
    for seed in range(10):
        F = random_tensor_sum(np.random.default_rng(1000 + seed))
        tab = functional_table(F, "all")
        quantities = [((), tab.I)] + [((c,), tab.J[c]) for c in F.cells] + \
            [((a, b), v) for (a, b), v in tab.L.items()]
        for q, (exc, exact) in enumerate(quantities):
            m, se = monte_carlo(F, 10**6, seed=seed * 100 + q, excluded=exc)
            worst = max(worst, abs(m - float(exact)) / se if se else (0.0 if m == exact else math.inf))
            checks += 1
    ok = exact_example and worst <= 3
    record(4, ok, f"I((1-10t)^2)=1/30 exact: {exact_example}; {checks} MC checks, worst |z|={worst:.2f}")


def test_criterion_5_basis_ratio_trend():
    ratios = [basis_ratios(maynard_basis(J)) for J in (4, 8, 16)]
    c = min(r.c for r in ratios)
    C = max(r.C for r in ratios)
    lower = all(r.ratio_J >= c * r.target_J * (1 - 1e-12) for r in ratios)
    upper = all(r.ratio_L <= C * r.target_L * (1 + 1e-12) for r in ratios)
    ok = c > 0 and math.isfinite(C) and lower and upper
    per = "; ".join(f"J={r.J}: J/I={r.ratio_J:.4g} L/I={r.ratio_L:.4g}" for r in ratios)
    record(5, ok, f"c={c:.4g} C={C:.4g} ({per})")


def _positive(F):
    return F if I_functional(F) > 0 else F.scaled_amplitude(-1)


def test_criterion_6_scaling_identities():
    worst, cases = 0.0, 0
    for seed in range(12):
        rng = np.random.default_rng(500 + seed)
        nb = 1 + seed % 3
        blocks = [_positive(random_tensor_sum(rng, k=int(rng.integers(1, 3)), terms=2)) for _ in range(nb)]
        if nb > 1:
            # several blocks: the identities need each block to satisfy integral F = integral F^2
            blocks = [normalized(b) for b in blocks]
        raw = rng.integers(1, 10, size=nb)
        thetas = [Fraction(int(x), int(raw.sum()) + 1) for x in raw]
        big = functional_table(scaled_product(blocks, thetas), "all", exact=False)
        for i, (blk, th) in enumerate(zip(blocks, thetas)):
            small = functional_table(blk, "all", exact=False)
            for j in range(blk.k):
                lhs, rhs = big.J[(i, j)] / big.I, float(th) * small.J[(0, j)] / small.I
                worst = max(worst, abs(lhs - rhs) / abs(rhs))
                cases += 1
            for (a, b), v in small.L.items():
                lhs, rhs = big.L[((i, a[1]), (i, b[1]))] / big.I, float(th) ** 2 * v / small.I
                worst = max(worst, abs(lhs - rhs) / abs(rhs))
                cases += 1
    record(6, worst <= 1e-9, f"{cases} identities, worst relative error {worst:.2e}")


def test_criterion_7_half_sumset(tmp_path, capsys):
    out = tmp_path / "sumset.json"
    t0 = time.perf_counter()
    code = _cli("sumset", "build", "--a", "1,9,25,49", "--count", "4", "--bound", "1e4", "--out", out)
    elapsed = time.perf_counter() - t0
    capsys.readouterr()
    doc = json.loads(out.read_text())
    a, b = doc["a"], doc["b"]
    oracle = brute_half_sumset(a, 4, 10**4)
    inc = all(y > x for x, y in zip(b, b[1:]))
    matrix = all(is_prime(a[i] + b[j]) for j in range(len(b)) for i in range(min(j, len(a))))
    ok = code == 0 and b == oracle and b[1:] == [2, 4, 22, 58] and inc and matrix and elapsed < 1
    record(7, ok, f"b={b} oracle={oracle} matrix_ok={matrix} time={elapsed:.3f}s")


def test_criterion_8_pipeline(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("PRIMECHAIN_THREADS", raising=False)
    args = ["chain", "run", "--pool", "odd-squares", "--shape", "2,3", "--theta", "0.5,0.25",
            "--N", "1e6", "--depth", "2"]
    blobs, codes = [], []
    for threads in (1, 1, 8):
        out = tmp_path / f"chain_{len(blobs)}.json"
        codes.append(_cli("--threads", threads, *args, "--out", out))
        blobs.append(out.read_bytes())
    verify_code = _cli("verify", tmp_path / "chain_0.json")
    capsys.readouterr()
    doc = json.loads(blobs[0])
    depth = len(doc["chain"])
    rewitness = all(all(is_prime(n + h) for h in w["offsets"]) and w["witnesses"]
                    for w in doc["prefix_witnesses"] for n in w["witnesses"])
    same = blobs[0] == blobs[1] == blobs[2]
    ok = codes == [0, 0, 0] and verify_code == 0 and depth >= 2 and rewitness and same
    offs = [link["offset"] for link in doc["chain"]]
    record(8, ok, f"depth={depth} offsets={offs} verified={verify_code == 0} byte_identical={same}")


def test_criterion_9_second_moment_bound():
    rng = np.random.default_rng(909)
    violations, checked = 0, 0
    for _ in range(100):
        t = random_event_table(rng)
        for i in t.blocks:
            bb = block_lower_bound(t, i)
            checked += 1
            violations += bb.bound > bb.exact + 1e-12
    eq_worst = 0.0
    for _ in range(20):
        t = random_event_table(rng, disjoint=True)
        for i in t.blocks:
            bb = block_lower_bound(t, i)
            eq_worst = max(eq_worst, abs(bb.bound - bb.exact))
    ok = violations == 0 and eq_worst <= 1e-12
    record(9, ok, f"{checked} blocks, {violations} violations; disjoint case max |bound-exact|={eq_worst:.1e}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
