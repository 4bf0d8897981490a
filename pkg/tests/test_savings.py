import numpy as np
from hypothesis import given, settings, strategies as st

import pytest

from instances import random_book
from v2x_clearing.errors import ValidationError
from v2x_clearing.model import Bundle, Contract, build_timeline, validate_book
from v2x_clearing.savings import is_feasible, soc_save, supply_per_hhp

T = build_timeline(3, [(1, 2)])
A = 1


def _book(*contracts):
    bundles = {c.bundle: Bundle(c.bundle, c.fleet, 10) for c in contracts}
    return validate_book(contracts, bundles.values(), T)


def test_single_contract_under_demand():
    book = _book(Contract("j1", "n", 5000, A, "w1"))
    assert soc_save(["j1"], book, [0, 20, 0], [0, 8000, 0]) == 30000


def test_empty_set():
    assert soc_save([], _book(Contract("j1", "n", 5000, A, "w1")), [0, 20, 0], [0, 8000, 0]) == 0


def test_excess_penalty():
    book = _book(Contract("j1", "n", 5000, A, "w1"), Contract("j2", "n", 5000, A, "w2"))
    assert soc_save(["j1", "j2"], book, [0, 15, 0], [0, 8000, 0]) == 20000


def test_unknown_id():
    with pytest.raises(ValidationError):
        soc_save(["zz"], _book(Contract("j1", "n", 5000, A, "w1")), [0, 1, 0], [0, 1, 0])


def test_negative_price_rewards_excess():
    book = _book(Contract("j1", "n", 0, A, "w1"))
    # 10 kWh at -2p against demand 4: value -20 minus penalty (-2 * 6) = -8
    assert soc_save(["j1"], book, [0, 4, 0], [0, -2000, 0]) == -8000


def test_feasibility():
    book = validate_book(
        [Contract("a", "n", 1, 1, "w1"), Contract("b", "n", 1, 2, "w1"), Contract("c", "n", 1, 2, "w2")],
        [Bundle("w1", "n", 3), Bundle("w2", "n", 4)],
        build_timeline(4, [(1, 3)]),
    )
    assert is_feasible(["a", "c"], book)
    assert not is_feasible(["a", "b"], book)
    assert is_feasible([], book)
    assert supply_per_hhp(["a", "c"], book, 4) == (0, 3, 4, 0)


def _min_form(ids, book, demand, prices):
    s = supply_per_hhp(ids, book, len(demand))
    bids = sum(book.contract(c).bid * book.size(c) for c in ids)
    return sum(m * min(x, d) for m, x, d in zip(prices, s, demand)) - bids


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_min_form_identity(seed):
    rng = np.random.default_rng(seed)
    book, demand, prices = random_book(rng)
    ids = [c.contract_id for c in book.contracts if rng.random() < 0.5]
    assert soc_save(ids, book, demand, prices) == _min_form(ids, book, demand, prices)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_additive_without_excess(seed):
    rng = np.random.default_rng(seed)
    book, _, prices = random_book(rng)
    ids = [g[0] for g in book.groups]
    big = [10**6] * len(prices)
    assert soc_save(ids, book, big, prices) == sum(soc_save([c], book, big, prices) for c in ids)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 5))
def test_monotone_in_demand(seed, bump):
    rng = np.random.default_rng(seed)
    book, demand, prices = random_book(rng)
    ids = [c.contract_id for c in book.contracts]
    h = book.contracts[0].hhp
    more = list(demand)
    more[h] += bump
    assert soc_save(ids, book, more, prices) >= soc_save(ids, book, demand, prices)


def test_bids_at_price_give_zero():
    book = validate_book(
        [Contract("a", "n", 8000, 1, "w1"), Contract("b", "m", 9000, 2, "w2")],
        [Bundle("w1", "n", 3), Bundle("w2", "m", 4)],
        build_timeline(4, [(1, 3)]),
    )
    assert soc_save(["a", "b"], book, [0, 10, 10, 0], [0, 8000, 9000, 0]) == 0
