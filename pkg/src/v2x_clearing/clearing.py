"""Winner determination.

The dynamic program walks bundles in ascending ``bundle_id`` order. A table
cell ``(r, d)`` holds the best feasible contract set drawn from the first
``r`` bundles when ``d`` kWh of demand is still uncovered at each hhp of the
peak. Adding contract ``j`` at hhp ``h`` moves the residual to
``max(0, d[h] - l_j)`` and earns ``m[h] * min(l_j, d[h]) - b_j * l_j``; summed
over a set this is exactly its society's savings, excess penalty included.

Ties are broken by (fewest accepted contracts, then lexicographically smallest
sorted id sequence). Both criteria are additive over contracts, so value,
count and the set itself are packed into one integer key per cell::

    key = value << shift  |  (n - count) << n  |  mask

where bit ``n - 1 - rank(id)`` of ``mask`` marks an accepted contract. A larger
key is a better cell, and the mask decodes straight back into the set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import prod
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, ValidationError
from .model import ContractBook, Timeline
from .savings import soc_save, supply_per_hhp

DEFAULT_STATE_BUDGET = 1 << 22
DEFAULT_ORACLE_CAP = 1 << 20
MAX_PEAK_HHPS = 10

_INT64_SAFE = 1 << 62


@dataclass(frozen=True)
class Allocation:
    accepted: tuple[str, ...]
    value: int
    per_hhp_supply: tuple[int, ...]

    @classmethod
    def empty(cls, hhp_count: int) -> "Allocation":
        return cls((), 0, (0,) * hhp_count)


def _allocation(accepted, book, demand, prices) -> Allocation:
    accepted = tuple(sorted(accepted))
    return Allocation(
        accepted,
        soc_save(accepted, book, demand, prices),
        supply_per_hhp(accepted, book, len(demand)),
    )


class _KeyLayout:
    def __init__(self, contract_ids: Sequence[str], value_bound: int):
        self.ids = tuple(sorted(contract_ids))
        self.n = n = len(self.ids)
        self.rank = {cid: i for i, cid in enumerate(self.ids)}
        self.count_bits = n.bit_length() + 1
        self.shift = n + self.count_bits
        self.empty = n << n
        bound = (value_bound + 2) << self.shift
        self.dtype = np.int64 if bound < _INT64_SAFE else object

    def step(self, cid: str) -> int:
        """Count and mask part of accepting ``cid``."""
        return (1 << (self.n - 1 - self.rank[cid])) - (1 << self.n)

    def decode(self, key: int) -> tuple[int, int, tuple[str, ...]]:
        key = int(key)
        value = key >> self.shift
        count = self.n - ((key >> self.n) & ((1 << self.count_bits) - 1))
        mask = key & ((1 << self.n) - 1)
        ids = tuple(cid for cid in self.ids if mask >> (self.n - 1 - self.rank[cid]) & 1)
        return value, count, ids


@dataclass
class DpTables:
    """Every layer of the peak DP; ``layers[r]`` covers the first ``r`` bundles.

    Axis ``i`` of a layer indexes the residual demand ``0..caps[i]`` at
    ``hhps[i]``.
    """

    hhps: tuple[int, ...]
    caps: tuple[int, ...]
    layers: list[np.ndarray]
    layout: _KeyLayout

    def entry(self, r: int, residual: Sequence[int]) -> tuple[tuple[str, ...], int]:
        """(accepted contract ids, savings) stored at cell ``(r, residual)``."""
        value, _, ids = self.layout.decode(self.layers[r][tuple(residual)])
        return ids, value


def _peak_dims(book: ContractBook, demand: Sequence[int]):
    offered: dict[int, int] = {}
    for c in book.contracts:
        offered[c.hhp] = offered.get(c.hhp, 0) + book.size(c.contract_id)
    hhps = tuple(sorted(offered))
    # Residual demand above what could ever be offered behaves like the offered total.
    caps = tuple(min(int(demand[h]), offered[h]) for h in hhps)
    return hhps, caps


def _check_single_peak(book: ContractBook) -> None:
    starts = {book.timeline.block_of(c.hhp).start for c in book.contracts}
    if len(starts) > 1:
        raise ValidationError("clear_peak_dp needs contracts from a single peak")


def _dp_layers(
    book: ContractBook,
    demand: Sequence[int],
    prices: Sequence[int],
    state_budget: int,
    max_hhps: int,
) -> tuple[tuple[int, ...], tuple[int, ...], _KeyLayout, Iterator[np.ndarray]]:
    _check_single_peak(book)
    hhps, caps = _peak_dims(book, demand)
    if len(hhps) > max_hhps:
        raise ValidationError(
            f"{len(hhps)} offered hhps in one peak; at most {max_hhps} are supported"
        )
    required = prod(c + 1 for c in caps)
    if required > state_budget:
        raise BudgetExceeded(
            f"peak DP needs {required} states per layer, budget is {state_budget}",
            required,
            state_budget,
        )
    bound = sum(
        (abs(prices[c.hhp]) + c.bid) * book.size(c.contract_id) for c in book.contracts
    )
    layout = _KeyLayout([c.contract_id for c in book.contracts], bound)
    axis_of = {h: i for i, h in enumerate(hhps)}
    shape = tuple(c + 1 for c in caps)

    def layers():
        cur = np.full(shape, layout.empty, dtype=layout.dtype)
        yield cur
        for group in book.groups:
            new = cur.copy()
            for cid in group:
                c = book.contract(cid)
                size = book.size(cid)
                axis = axis_of[c.hhp]
                residual = np.arange(caps[axis] + 1)
                if layout.dtype is object:
                    residual = residual.astype(object)
                src = np.maximum(np.arange(caps[axis] + 1) - size, 0)
                gain = prices[c.hhp] * np.minimum(residual, size) - c.bid * size
                add = gain * (1 << layout.shift) + layout.step(cid)
                view = [1] * len(shape)
                view[axis] = -1
                cand = np.take(cur, src, axis=axis) + add.reshape(view)
                new = np.maximum(new, cand)
            cur = new
            yield cur

    return hhps, caps, layout, layers()


def peak_dp_tables(
    book: ContractBook,
    demand: Sequence[int],
    prices: Sequence[int],
    *,
    state_budget: int = DEFAULT_STATE_BUDGET,
    max_hhps: int = MAX_PEAK_HHPS,
) -> DpTables:
    """Build and keep all DP layers for one peak (for inspection and tests)."""
    hhps, caps, layout, layers = _dp_layers(book, demand, prices, state_budget, max_hhps)
    return DpTables(hhps, caps, list(layers), layout)


def clear_peak_dp(
    book: ContractBook,
    demand: Sequence[int],
    prices: Sequence[int],
    *,
    state_budget: int = DEFAULT_STATE_BUDGET,
    max_hhps: int = MAX_PEAK_HHPS,
) -> Allocation:
    """Optimal feasible allocation for a book whose contracts share one peak.

    ``demand`` and ``prices`` are full-day vectors indexed by hhp.
    """
    if not book.contracts:
        return Allocation.empty(len(demand))
    hhps, caps, layout, layers = _dp_layers(book, demand, prices, state_budget, max_hhps)
    last = None
    for last in layers:
        pass
    value, _, ids = layout.decode(last[tuple(caps)])
    alloc = _allocation(ids, book, demand, prices)
    assert alloc.value == value
    return alloc


def clear_day(
    book: ContractBook,
    demand: Sequence[int],
    prices: Sequence[int],
    timeline: Timeline | None = None,
    *,
    state_budget: int = DEFAULT_STATE_BUDGET,
    max_hhps: int = MAX_PEAK_HHPS,
) -> Allocation:
    """Clear every peak on its own and merge; the objective separates by peak."""
    timeline = timeline or book.timeline
    if len(demand) != timeline.hhp_count or len(prices) != timeline.hhp_count:
        raise ValidationError("demand and prices must cover every hhp of the timeline")
    accepted: list[str] = []
    for peak in timeline.peaks:
        part = book.peak_slice(peak)
        if part.contracts:
            alloc = clear_peak_dp(
                part, demand, prices, state_budget=state_budget, max_hhps=max_hhps
            )
            accepted.extend(alloc.accepted)
    return _allocation(accepted, book, demand, prices)


def clear_bruteforce(
    book: ContractBook,
    demand: Sequence[int],
    prices: Sequence[int],
    *,
    cap: int = DEFAULT_ORACLE_CAP,
) -> Allocation:
    """Exhaustive search over all feasible subsets (one or no contract per bundle)."""
    required = prod(len(g) + 1 for g in book.groups)
    if required > cap:
        raise BudgetExceeded(
            f"brute force needs {required} subsets, cap is {cap}", required, cap
        )
    best_value = None
    best_ids: tuple[str, ...] = ()
    for choice in itertools.product(*[(None,) + g for g in book.groups]):
        ids = tuple(sorted(cid for cid in choice if cid is not None))
        value = soc_save(ids, book, demand, prices)
        if (
            best_value is None
            or value > best_value
            or (value == best_value and len(ids) < len(best_ids))
            or (value == best_value and len(ids) == len(best_ids) and ids < best_ids)
        ):
            best_value, best_ids = value, ids
    return _allocation(best_ids, book, demand, prices)
