"""Seeded random instance generators shared by the tests."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from v2x_clearing.model import Bundle, Contract, FleetPrivate, build_timeline, validate_book
from v2x_clearing.vcg import truthful_bid


def random_book(rng: np.random.Generator, *, max_bundles=6, max_per_bundle=3, max_hhps=4,
                max_demand=30, max_size=12, fleets=3, hhp_count=None):
    """One peak of up to ``max_hhps`` hhps surrounded by valleys."""
    k = int(rng.integers(1, max_hhps + 1))
    n = hhp_count or k + 2
    start = 1
    timeline = build_timeline(n, [(start, start + k)])
    hhps = list(range(start, start + k))
    nb = int(rng.integers(1, max_bundles + 1))
    bundles, contracts = [], []
    for b in range(nb):
        fleet = f"f{int(rng.integers(0, fleets))}"
        bid_ = f"w{b}"
        bundles.append(Bundle(bid_, fleet, int(rng.integers(1, max_size + 1))))
        m = int(rng.integers(1, min(max_per_bundle, k) + 1))
        for i, h in enumerate(sorted(rng.choice(hhps, size=m, replace=False))):
            contracts.append(
                Contract(f"c{b}{i}", fleet, int(rng.integers(0, 12)) * 1000, int(h), bid_,
                         int(rng.integers(0, 5)) * 10000)
            )
    demand = [0] * n
    prices = [1000] * n
    for h in hhps:
        demand[h] = int(rng.integers(0, max_demand + 1))
        prices[h] = int(rng.integers(1, 15)) * 1000
    return validate_book(contracts, bundles, timeline), demand, prices


def truthful_instance(rng: np.random.Generator, *, max_bundles=5, max_per_bundle=3, max_hhps=3,
                      max_demand=30, fleets=3):
    """Book with every bid equal to the bidder's expected cost per kWh.

    Probabilities are quarters, per-kWh energy costs are multiples of 4 and
    fines are ``size * F`` with ``F`` a multiple of 4, so the expected cost is
    an exact multiple of the bundle size and the bid loses nothing to rounding.
    """
    k = int(rng.integers(1, max_hhps + 1))
    n = k + 2
    timeline = build_timeline(n, [(1, 1 + k)])
    hhps = list(range(1, 1 + k))
    nb = int(rng.integers(1, max_bundles + 1))
    fleet_ids = [f"f{i}" for i in range(int(rng.integers(1, fleets + 1)))]
    energy = {f: int(rng.integers(0, 1500)) * 4 for f in fleet_ids}
    bundles, contracts, probs = [], [], {f: {} for f in fleet_ids}
    for b in range(nb):
        fleet = fleet_ids[int(rng.integers(0, len(fleet_ids)))]
        size = int(rng.integers(1, 13))
        bundles.append(Bundle(f"w{b}", fleet, size))
        m = int(rng.integers(1, min(max_per_bundle, k) + 1))
        for i, h in enumerate(sorted(rng.choice(hhps, size=m, replace=False))):
            cid = f"c{b}{i}"
            fine = size * int(rng.integers(0, 2500)) * 4
            contracts.append(Contract(cid, fleet, 0, int(h), f"w{b}", fine))
            probs[fleet][cid] = Fraction(int(rng.integers(1, 5)), 4)
    privates = {f: FleetPrivate(f, probs[f], energy[f], 0, 0) for f in fleet_ids}
    book = validate_book(contracts, bundles, timeline)
    bids = {}
    for c in book.contracts:
        size = book.size(c.contract_id)
        bids[c.contract_id] = truthful_bid(c, size, privates[c.fleet])
    book = book.with_bids(bids)
    demand = [0] * n
    prices = [1000] * n
    for h in hhps:
        demand[h] = int(rng.integers(0, max_demand + 1))
        prices[h] = int(rng.integers(1, 30)) * 500
    return book, demand, prices, privates


def small_scenario(seed=0, p=None, *, imbalance=None, sm=0, const_ex=0.1, fine=60000):
    """Two peaks, three fleets, four EVs. ``p`` overrides every success probability."""
    from v2x_clearing.frequency import FrConfig
    from v2x_clearing.model import DemandVector, PriceVector
    from v2x_clearing.simulator import EvSpec, Scenario

    n = 12
    timeline = build_timeline(n, [(2, 5), (8, 11)])
    rng = np.random.default_rng(1000 + seed)
    bundles, contracts, fleets = [], [], []
    for fi, fleet in enumerate(("fa", "fb", "fc")):
        probs = {}
        for b in range(3):
            peak = (2, 5) if b % 2 == 0 else (8, 11)
            size = int(rng.integers(3, 9))
            bid_ = f"{fleet}w{b}"
            bundles.append(Bundle(bid_, fleet, size))
            for h in range(*peak):
                if rng.random() < 0.6:
                    cid = f"{bid_}h{h:02d}"
                    contracts.append(Contract(cid, fleet, int(rng.integers(2, 9)) * 1000, h, bid_, fine))
                    probs[cid] = float(rng.choice([0.3, 0.6, 0.9])) if p is None else p
        fleets.append(FleetPrivate(fleet, probs, 2000 + 500 * fi, 500, 100))
    demand = [0] * n
    for h in (2, 3, 4, 8, 9, 10):
        demand[h] = int(rng.integers(4, 14))
    da = tuple(9000 if timeline.is_peak(h) else 4000 for h in range(n))
    prices = {
        "day-ahead": PriceVector(da, "day-ahead"),
        "balancing": PriceVector(tuple(3 * x // 2 for x in da), "balancing"),
    }
    evs = (
        EvSpec("ev1", 60, 30, 10, 50, (2, 3, 4)),
        EvSpec("ev2", 40, 20, 8, 36, (3, 4, 8, 9)),
        EvSpec("ev3", 80, 70, 16, 72, (8, 9, 10)),
        EvSpec("ev4", 50, 12, 10, 45, tuple(range(n))),
    )
    if imbalance is None:
        imbalance = tuple(int(x) for x in rng.integers(-4, 5, size=n))
    return Scenario(
        timeline=timeline,
        demand=DemandVector(tuple(demand), sm),
        prices=prices,
        bundles=tuple(bundles),
        contracts=tuple(contracts),
        fleets=tuple(fleets),
        evs=evs,
        imbalance=tuple(imbalance),
        fr=FrConfig(const_ex, 0.1, 500),
        seed=seed,
    )
