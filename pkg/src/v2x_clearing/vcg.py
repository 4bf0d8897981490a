"""VCG payments, utilities and the bid-deviation harness."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .clearing import Allocation, clear_day
from .errors import ValidationError
from .model import Contract, ContractBook, FleetPrivate, round_half_up
from .savings import supply_per_hhp

DEFAULT_MULTIPLIERS = tuple(
    Fraction(x) for x in ("1/4", "1/2", "3/4", "9/10", "1", "11/10", "3/2", "2", "4")
)

Clearer = Callable[[ContractBook, Sequence[int], Sequence[int]], Allocation]


def _default_clear(book, demand, prices):
    return clear_day(book, demand, prices)


@dataclass(frozen=True)
class PaymentSchedule:
    payments: Mapping[str, int]
    allocation: Allocation


def fleet_accepted(allocation: Allocation, book: ContractBook, fleet: str) -> list[str]:
    return [cid for cid in allocation.accepted if book.contract(cid).fleet == fleet]


def soc_save_excluding(
    allocation: Allocation,
    fleet: str,
    book: ContractBook,
) -> int:
    """Savings of ``allocation`` with fleet ``fleet``'s bids added back."""
    return allocation.value + sum(
        book.contract(cid).bid * book.size(cid)
        for cid in fleet_accepted(allocation, book, fleet)
    )


def vcg_payment(
    book: ContractBook,
    demand: Sequence[int],
    prices: Sequence[int],
    fleet: str,
    *,
    allocation: Allocation | None = None,
    clear: Clearer = _default_clear,
) -> int:
    """Fleet ``fleet``'s marginal contribution: savings with it (its bids
    excluded) minus the best savings reachable without any of its contracts.
    """
    if fleet not in book.fleets():
        if not any(b.owner_fleet == fleet for b in book.bundles):
            raise ValidationError(f"unknown fleet {fleet!r}")
        return 0
    if allocation is None:
        allocation = clear(book, demand, prices)
    without = clear(book.without_fleet(fleet), demand, prices)
    return soc_save_excluding(allocation, fleet, book) - without.value


def payment_schedule(
    book: ContractBook,
    demand: Sequence[int],
    prices: Sequence[int],
    *,
    clear: Clearer = _default_clear,
) -> PaymentSchedule:
    """Payments for every fleet with at least one offered contract."""
    allocation = clear(book, demand, prices)
    payments = {
        n: vcg_payment(book, demand, prices, n, allocation=allocation, clear=clear)
        for n in book.fleets()
    }
    return PaymentSchedule(payments, allocation)


def fleet_expected_cost(contract: Contract, size: int, private: FleetPrivate) -> int:
    """Expected cost of attempting a contract, rounded to whole milli-pence.

    ``p * (m_imported + c_bd) * size + fine * (1 - p) + scheduling_cost``
    """
    p = Fraction(private.p(contract.contract_id))
    cost = (
        p * (private.m_imported + private.c_bd) * size
        + contract.fine * (1 - p)
        + private.scheduling_cost
    )
    return round_half_up(cost)


def truthful_bid(contract: Contract, size: int, private: FleetPrivate) -> int:
    """Per-kWh bid equal to the expected cost, rounded up to whole milli-pence."""
    return -(-fleet_expected_cost(contract, size, private) // size)


def _expected_costs(allocation, book, fleet, private) -> int:
    return sum(
        fleet_expected_cost(book.contract(cid), book.size(cid), private)
        for cid in fleet_accepted(allocation, book, fleet)
    )


def fleet_utility(
    book: ContractBook,
    demand: Sequence[int],
    prices: Sequence[int],
    fleet: str,
    private: FleetPrivate,
    *,
    allocation: Allocation | None = None,
    clear: Clearer = _default_clear,
) -> int:
    """VCG payment minus the expected cost of the fleet's accepted contracts.

    Costs always come from ``private``; the bids in ``book`` only steer the
    allocation and the payment.
    """
    if allocation is None:
        allocation = clear(book, demand, prices)
    pay = vcg_payment(book, demand, prices, fleet, allocation=allocation, clear=clear)
    return pay - _expected_costs(allocation, book, fleet, private)


def platform_utility(
    book: ContractBook,
    demand: Sequence[int],
    prices: Sequence[int],
    payments: Mapping[str, int] | PaymentSchedule,
    *,
    allocation: Allocation | None = None,
    clear: Clearer = _default_clear,
) -> int:
    """Market value of demand covered by accepted supply minus all payments."""
    if isinstance(payments, PaymentSchedule):
        allocation = allocation or payments.allocation
        payments = payments.payments
    if allocation is None:
        allocation = clear(book, demand, prices)
    supply = supply_per_hhp(allocation.accepted, book, len(demand))
    covered = sum(min(d, s) * m for d, s, m in zip(demand, supply, prices))
    return covered - sum(payments.values())


def deviation_grid(
    book: ContractBook,
    demand: Sequence[int],
    prices: Sequence[int],
    fleet: str,
    private: FleetPrivate,
    multipliers: Sequence[Fraction] = DEFAULT_MULTIPLIERS,
    *,
    clear: Clearer = _default_clear,
) -> list[tuple[dict[str, int], int]]:
    """Scale every bid of ``fleet`` by each multiplier, re-clear, and report
    the fleet's utility measured with its true costs.
    """
    own = [c for c in book.contracts if c.fleet == fleet]
    out = []
    for mult in multipliers:
        mult = Fraction(mult)
        if mult <= 0:
            raise ValidationError(f"multiplier must be > 0, got {mult}")
        bids = {c.contract_id: round_half_up(c.bid * mult) for c in own}
        deviated = book.with_bids(bids)
        out.append(
            (bids, fleet_utility(deviated, demand, prices, fleet, private, clear=clear))
        )
    return out
