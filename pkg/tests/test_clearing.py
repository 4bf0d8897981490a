import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from instances import random_book
from v2x_clearing.clearing import (
    Allocation,
    clear_bruteforce,
    clear_day,
    clear_peak_dp,
    peak_dp_tables,
)
from v2x_clearing.errors import BudgetExceeded, ValidationError
from v2x_clearing.model import Bundle, Contract, build_timeline, validate_book
from v2x_clearing.savings import is_feasible, soc_save, supply_per_hhp


def two_hhp_example(offset=1, hhp_count=4, bundle="w1", prefix=""):
    return (
        [Contract(prefix + "a", "n", 5000, offset, bundle), Contract(prefix + "b", "n", 5000, offset + 1, bundle)],
        [Bundle(bundle, "n", 10)],
    )


def test_one_bundle_two_hhps():
    t = build_timeline(4, [(1, 3)])
    cs, bs = two_hhp_example()
    book = validate_book(cs, bs, t)
    alloc = clear_peak_dp(book, [0, 20, 20, 0], [0, 8000, 9000, 0])
    assert alloc.accepted == ("b",) and alloc.value == 40000
    assert alloc.per_hhp_supply == (0, 0, 10, 0)


def test_empty_book():
    t = build_timeline(4, [(1, 3)])
    book = validate_book([], [], t)
    assert clear_peak_dp(book, [0] * 4, [0] * 4) == Allocation.empty(4)
    assert clear_day(book, [0] * 4, [0] * 4) == Allocation.empty(4)
    assert clear_bruteforce(book, [0] * 4, [0] * 4) == Allocation((), 0, (0,) * 4)


def two_fleets():
    t = build_timeline(3, [(1, 2)])
    book = validate_book(
        [Contract("a", "x", 3000, 1, "wx"), Contract("b", "y", 4000, 1, "wy")],
        [Bundle("wx", "x", 10), Bundle("wy", "y", 10)],
        t,
    )
    return book, [0, 10, 0], [0, 8000, 0]


def test_two_fleets_competition():
    book, d, m = two_fleets()
    alloc = clear_peak_dp(book, d, m)
    assert alloc.accepted == ("a",) and alloc.value == 50000
    assert soc_save(["a", "b"], book, d, m) == 10000


def test_bid_above_price_rejected():
    t = build_timeline(3, [(1, 2)])
    book = validate_book([Contract("a", "x", 9000, 1, "w")], [Bundle("w", "x", 5)], t)
    for clear in (clear_day, clear_bruteforce):
        assert clear(book, [0, 10, 0], [0, 8000, 0]).accepted == ()


def test_two_peaks_union():
    t = build_timeline(7, [(1, 3), (4, 6)])
    c1, b1 = two_hhp_example(1, bundle="w1", prefix="p")
    c2, b2 = two_hhp_example(4, bundle="w2", prefix="q")
    book = validate_book(c1 + c2, b1 + b2, t)
    d = [0, 20, 20, 0, 20, 20, 0]
    m = [0, 8000, 9000, 0, 8000, 9000, 0]
    alloc = clear_day(book, d, m)
    assert alloc.accepted == ("pb", "qb") and alloc.value == 80000
    assert alloc == clear_bruteforce(book, d, m)


def test_peak_without_contracts():
    t = build_timeline(7, [(1, 3), (4, 6)])
    cs, bs = two_hhp_example(1)
    book = validate_book(cs, bs, t)
    alloc = clear_day(book, [0, 20, 20, 0, 5, 5, 0], [0, 8000, 9000, 0, 1, 1, 0])
    assert alloc.accepted == ("b",)


def test_zero_peak_timeline():
    t = build_timeline(3, [])
    assert clear_day(validate_book([], [], t), [1, 1, 1], [1, 1, 1]) == Allocation.empty(3)


def test_single_peak_required():
    t = build_timeline(7, [(1, 3), (4, 6)])
    cs = [Contract("a", "n", 1, 1, "w1"), Contract("b", "n", 1, 4, "w2")]
    book = validate_book(cs, [Bundle("w1", "n", 1), Bundle("w2", "n", 1)], t)
    with pytest.raises(ValidationError, match="single peak"):
        clear_peak_dp(book, [1] * 7, [1] * 7)


def test_state_budget_names_requirement():
    t = build_timeline(4, [(1, 3)])
    cs, bs = two_hhp_example()
    book = validate_book(cs, bs, t)
    with pytest.raises(BudgetExceeded) as err:
        clear_day(book, [0, 20, 20, 0], [0, 1, 1, 0], state_budget=100)
    assert err.value.required == 121 and "121" in str(err.value)


def test_oracle_cap():
    t = build_timeline(4, [(1, 3)])
    cs, bs = two_hhp_example()
    with pytest.raises(BudgetExceeded):
        clear_bruteforce(validate_book(cs, bs, t), [0, 1, 1, 0], [0, 1, 1, 0], cap=2)


def test_too_many_offered_hhps():
    t = build_timeline(14, [(1, 13)])
    cs = [Contract(f"c{h:02d}", "n", 0, h, f"w{h:02d}") for h in range(1, 13)]
    bs = [Bundle(f"w{h:02d}", "n", 1) for h in range(1, 13)]
    with pytest.raises(ValidationError, match="at most 10"):
        clear_day(validate_book(cs, bs, t), [1] * 14, [1] * 14)


def test_tie_break_fewest_then_lexicographic():
    t = build_timeline(3, [(1, 2)])
    # {b} and {c, d} both save 10 against demand 10; fewer contracts wins.
    book = validate_book(
        [
            Contract("a", "x", 8000, 1, "w1"),
            Contract("b", "x", 7000, 1, "w2"),
            Contract("c", "y", 7000, 1, "w3"),
            Contract("d", "y", 7000, 1, "w4"),
        ],
        [Bundle("w1", "x", 10), Bundle("w2", "x", 10), Bundle("w3", "y", 5), Bundle("w4", "y", 5)],
        t,
    )
    d, m = [0, 10, 0], [0, 8000, 0]
    assert soc_save(["c", "d"], book, d, m) == 10000
    alloc = clear_day(book, d, m)
    assert alloc.value == 10000 and alloc.accepted == ("b",)
    assert clear_bruteforce(book, d, m) == alloc


def test_tie_break_smallest_ids():
    t = build_timeline(3, [(1, 2)])
    book = validate_book(
        [Contract("q", "x", 7000, 1, "w1"), Contract("p", "y", 7000, 1, "w2")],
        [Bundle("w1", "x", 10), Bundle("w2", "y", 10)],
        t,
    )
    d, m = [0, 10, 0], [0, 8000, 0]
    assert clear_day(book, d, m).accepted == ("p",) == clear_bruteforce(book, d, m).accepted


def test_dp_table_entries():
    t = build_timeline(3, [(1, 2)])
    book, _, m = two_fleets()
    tables = peak_dp_tables(book, [0, 10, 0], m)
    assert tables.hhps == (1,) and tables.caps == (10,)
    assert tables.entry(0, [10]) == ((), 0)
    assert tables.entry(2, [10]) == (("a",), 50000)
    assert tables.entry(2, [5]) == (("a",), 10000)
    assert tables.entry(2, [0]) == ((), 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dp_table_invariants(seed):
    rng = np.random.default_rng(seed)
    book, demand, prices = random_book(rng)
    tables = peak_dp_tables(book, demand, prices)
    cells = list(itertools.product(*[range(c + 1) for c in tables.caps]))
    for d in cells:
        assert tables.entry(0, d) == ((), 0)
    zero = (0,) * len(tables.caps)
    for r in range(len(tables.layers)):
        assert tables.entry(r, zero)[1] == 0
    for d in cells:
        values = [tables.entry(r, d)[1] for r in range(len(tables.layers))]
        assert values == sorted(values)
    # each cell is the optimum over the prefix at that residual demand
    r = len(tables.layers) - 1
    d = cells[int(rng.integers(len(cells)))]
    full = list(demand)
    for h, x in zip(tables.hhps, d):
        full[h] = x
    ids, value = tables.entry(r, d)
    assert clear_bruteforce(book, full, prices).accepted == ids
    assert soc_save(ids, book, full, prices) == value


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oracle_equivalence(seed):
    rng = np.random.default_rng(seed)
    book, demand, prices = random_book(rng)
    a = clear_day(book, demand, prices)
    b = clear_bruteforce(book, demand, prices)
    assert a == b
    assert is_feasible(a.accepted, book)
    assert a.per_hhp_supply == supply_per_hhp(a.accepted, book, len(demand))
    assert a.value == soc_save(a.accepted, book, demand, prices)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oracle_equivalence_negative_prices(seed):
    rng = np.random.default_rng(seed)
    book, demand, prices = random_book(rng)
    prices = [p if rng.random() < 0.6 else -p for p in prices]
    assert clear_day(book, demand, prices) == clear_bruteforce(book, demand, prices)


def test_wide_keys_fall_back_to_python_ints():
    rng = np.random.default_rng(7)
    for _ in range(20):
        book, demand, prices = random_book(rng)
        prices = [p * 10**13 for p in prices]
        assert clear_day(book, demand, prices) == clear_bruteforce(book, demand, prices)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_efficiency_against_every_feasible_subset(seed):
    rng = np.random.default_rng(seed)
    book, demand, prices = random_book(rng, max_bundles=4)
    best = clear_day(book, demand, prices).value
    for choice in itertools.product(*[(None,) + g for g in book.groups]):
        ids = [c for c in choice if c is not None]
        assert soc_save(ids, book, demand, prices) <= best


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_demand_monotonicity(seed, bump):
    rng = np.random.default_rng(seed)
    book, demand, prices = random_book(rng)
    h = book.contracts[0].hhp
    more = list(demand)
    more[h] += bump
    assert clear_day(book, more, prices).value >= clear_day(book, demand, prices).value


def test_determinism():
    rng = np.random.default_rng(3)
    book, demand, prices = random_book(rng)
    assert repr(clear_day(book, demand, prices)) == repr(clear_day(book, demand, prices))
