import pytest

from oracles import brute_good_chain, is_good
from primechain.errors import InputError, InvariantViolation
from primechain.good_tuples import (
    GoodTuple,
    build_chain,
    extend,
    extension_offsets,
    verify_good,
)

# smallest-next chain from 5, computed by brute_good_chain and frozen
CHAIN_FROM_5 = (5, 11, 17, 41, 641)


def test_oracle_chain_is_frozen_value():
    assert tuple(brute_good_chain(5, 5, 2000)) == CHAIN_FROM_5


def test_build_chain_matches_oracle():
    res = build_chain(5, 5, 10**6)
    assert res.primes == CHAIN_FROM_5
    assert res.step_witnesses == CHAIN_FROM_5[1:]
    assert res.verify()


@pytest.mark.parametrize("seed", [5, 7, 11, 13, 23])
def test_build_chain_other_seeds(seed):
    res = build_chain(seed, 4, 5000)
    assert list(res.primes) == brute_good_chain(seed, 4, 5000)
    assert is_good(res.primes)
    assert res.verify()


def test_verify_good_reports_violations():
    assert verify_good((5,))
    assert verify_good((5, 11))
    # 5 + 7 + 1 = 13 is prime and 5 does not divide 9
    assert verify_good((5, 7)) and is_good((5, 7))
    chk = verify_good((5, 13))
    assert not chk and "divides" in chk.violation
    chk = verify_good((5, 17, 29))
    assert not chk and "composite" in chk.violation
    assert not verify_good((3, 5))
    assert not verify_good((9,))
    assert not verify_good((11, 5))
    assert not verify_good(())


def test_verify_good_agrees_with_oracle():
    ps = [p for p in range(5, 120) if is_good([p])]
    for a in ps:
        for b in ps:
            if a < b:
                assert bool(verify_good((a, b))) == is_good((a, b)), (a, b)


def test_extension_offsets():
    g = GoodTuple((5, 11))
    assert extension_offsets(g).offsets == (0, 2, 6, 12)
    assert extension_offsets(()).offsets == (0, 2)
    assert extension_offsets((5,)).offsets == (0, 2, 6)
    # 3 + 1 = 4 fills the last class mod 3; only a corrupted tuple gets here
    with pytest.raises(InvariantViolation):
        extension_offsets((3,))


def test_extend_none_when_bound_too_small():
    g = GoodTuple((5, 11, 17, 41))
    assert extend(g, 600) is None
    assert extend(g, 641).primes[-1] == 641
    with pytest.raises(InputError):
        extend(g, 41)


def test_good_tuple_rejects_bad():
    with pytest.raises(InputError):
        GoodTuple((5, 13))


def test_chain_result_tamper():
    res = build_chain(5, 4, 1000)
    d = res.to_dict()
    assert d == {"primes": [5, 11, 17, 41], "step_witnesses": [11, 17, 41], "bound": 1000}
    from primechain.good_tuples import ChainResult

    assert not ChainResult((5, 11, 19), (11, 19), 1000).verify()
