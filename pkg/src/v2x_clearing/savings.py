"""Society's savings for a set of accepted contracts, and feasibility."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

from .model import ContractBook


def soc_save(
    accepted: Iterable[str],
    book: ContractBook,
    demand: Sequence[int],
    prices: Sequence[int],
) -> int:
    """Savings from accepting ``accepted`` against buying at spot ``prices``.

    Market value of the exported energy minus the bids, minus the market value
    of any energy exported beyond ``demand`` at its hhp::

        sum_j (m[h_j] - b_j) * l_j  -  sum_h m[h] * max(0, supply[h] - demand[h])

    Feasibility is not required; a contract id outside the book raises.
    """
    supply: Counter[int] = Counter()
    total = 0
    for cid in accepted:
        c = book.contract(cid)
        size = book.size(cid)
        total += prices[c.hhp] * size - c.bid * size
        supply[c.hhp] += size
    for h, s in supply.items():
        total -= prices[h] * max(0, s - demand[h])
    return total


def is_feasible(accepted: Iterable[str], book: ContractBook) -> bool:
    """True when no bundle is exported by more than one accepted contract."""
    seen: set[str] = set()
    for cid in accepted:
        b = book.contract(cid).bundle
        if b in seen:
            return False
        seen.add(b)
    return True


def supply_per_hhp(accepted: Iterable[str], book: ContractBook, hhp_count: int) -> tuple[int, ...]:
    out = [0] * hhp_count
    for cid in accepted:
        out[book.contract(cid).hhp] += book.size(cid)
    return tuple(out)
