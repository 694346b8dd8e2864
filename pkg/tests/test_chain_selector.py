import json

import numpy as np
import pytest

from oracles import brute_half_sumset, random_event_table, trial_division, union_by_enumeration
from primechain.chain_selector import (
    EventTable,
    GreedyStrategy,
    block_lower_bound,
    build_half_sumset,
    pool_offsets,
    pushforward,
    run_pipeline,
    select_chain,
)
from primechain.errors import InputError
from primechain.maynard_sieve import SieveConfig, SieveGrid, default_cutoff, empirical_measure

# smallest-next b for a = (1, 9, 25, 49), from brute_half_sumset, frozen
SUMSET_B = (1, 2, 4, 22, 58)


def test_event_table_measures(rng):
    for _ in range(20):
        t = random_event_table(rng)
        for c in t.cells:
            assert t.singles[c] == pytest.approx(union_by_enumeration(t, [c]))
        for i in t.blocks:
            cells = t.block_cells(i)
            assert t.union_measure(cells) == pytest.approx(union_by_enumeration(t, cells))


def test_event_table_validation():
    with pytest.raises(InputError):
        EventTable(np.ones(3), np.zeros((2, 1), dtype=bool), [(0, 0)])
    with pytest.raises(InputError):
        EventTable(-np.ones(2), np.zeros((2, 1), dtype=bool), [(0, 0)])


def test_block_lower_bound_examples():
    w = np.full(4, 0.25)
    hits = np.array([[1, 0], [0, 1], [0, 0], [0, 0]], dtype=bool)
    b = block_lower_bound(EventTable(w, hits, [(0, 0), (0, 1)]), 0)
    assert b.bound == pytest.approx(0.5) and b.exact == pytest.approx(0.5)
    hits = np.array([[1, 1], [0, 0], [0, 0], [0, 0]], dtype=bool)
    b = block_lower_bound(EventTable(w, hits, [(0, 0), (0, 1)]), 0)
    assert b.bound == pytest.approx(0.25) and b.exact == pytest.approx(0.25)
    with pytest.raises(InputError):
        block_lower_bound(EventTable(w, hits, [(0, 0), (0, 1)]), 3)


def test_select_chain_greedy():
    w = np.array([0.4, 0.3, 0.3])
    hits = np.array([[1, 0, 1, 0], [0, 1, 1, 1], [0, 1, 0, 1]], dtype=bool)
    t = EventTable(w, hits, [(0, 0), (0, 1), (1, 0), (1, 1)])
    assert select_chain([t], 2) == [(0, 1), (1, 1)]
    assert select_chain([t], 1) == [(1, 0)]
    with pytest.raises(InputError):
        select_chain([t], 0)


def test_select_chain_reserves_blocks():
    w = np.array([0.5, 0.5])
    # block 1 has the heaviest cell, but taking it first would leave no later block
    hits = np.array([[1, 1], [0, 1]], dtype=bool)
    t = EventTable(w, hits, [(0, 0), (1, 0)])
    assert select_chain([t], 2) == [(0, 0), (1, 0)]
    assert select_chain([t], 2, GreedyStrategy(reserve_blocks=False)) == [(1, 0)]


def test_select_chain_falls_back_to_smaller_table():
    cells = [(0, 0), (1, 0)]
    big = EventTable(np.array([1.0]), np.array([[1, 0]], dtype=bool), cells)
    small = EventTable(np.array([1.0]), np.array([[1, 1]], dtype=bool), cells)
    assert select_chain([small, big], 2) == [(0, 0), (1, 0)]


def test_half_sumset_matches_oracle():
    assert tuple(brute_half_sumset((1, 9, 25, 49), 4, 10**4)) == SUMSET_B
    hs = build_half_sumset((1, 9, 25, 49), 4, 10**4)
    assert hs.b == SUMSET_B and hs.verify()
    assert all(ok for *_, ok in hs.matrix())
    assert len(hs.matrix()) == 10
    assert len(hs.to_rows()) == 10


def test_half_sumset_partial_and_errors():
    hs = build_half_sumset((1, 9, 25, 49), 4, 30)
    assert hs.b == (1, 2, 4, 22)
    with pytest.raises(InputError):
        build_half_sumset((1, 9), 3, 100)
    with pytest.raises(InputError):
        build_half_sumset((0, 2, 4), 2, 100)


def test_pool_offsets():
    assert pool_offsets("odd-squares", 3).offsets == (1, 9, 25)
    assert pool_offsets([6, 0, 2], 2).offsets == (0, 2)
    with pytest.raises(InputError):
        pool_offsets("evens", 2)
    with pytest.raises(InputError):
        pool_offsets([0, 2], 3)


def test_pushforward_hits():
    g = SieveGrid((2,), ((0, 2),))
    nu = empirical_measure(SieveConfig(g, 10**5), default_cutoff(g))
    t = pushforward(nu, g)
    rows = np.flatnonzero(t.hits[:, 0])[:5]
    assert all(trial_division(int(nu.support[r])) for r in rows)


def test_run_pipeline_small():
    cert = run_pipeline("odd-squares", (2, 3), (0.5, 0.25), [10**5], 2, workers=1)
    assert len(cert.chain) == 2 and cert.verify()
    d = json.loads(json.dumps(cert.to_dict()))
    assert d["pool"] == [1, 9, 25, 49, 81]
    for r, w in enumerate(cert.prefix_witnesses, start=1):
        assert w.offsets == cert.offsets[:r]
        assert all(trial_division(n + h) for n in w.witnesses for h in w.offsets)
