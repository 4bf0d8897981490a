"""Frequency regulation: plugged EVs absorb or cover the per-hhp imbalance and
are paid for availability and for delivered energy.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .errors import ValidationError
from .model import Timeline
from .reliability import ActiveSet, SupplyDistribution, supply_distribution


@dataclass(frozen=True)
class EvFrState:
    ev_id: str
    soc: int
    x_min: int
    x_max: int
    battery_capacity: int
    plugged: bool = True

    def __post_init__(self):
        if not 0 <= self.x_min <= self.x_max <= self.battery_capacity:
            raise ValidationError(
                f"EV {self.ev_id}: need 0 <= x_min <= x_max <= capacity, got "
                f"{self.x_min}, {self.x_max}, {self.battery_capacity}"
            )
        if not 0 <= self.soc <= self.battery_capacity:
            raise ValidationError(f"EV {self.ev_id}: soc {self.soc} outside battery")


def available_export(ev: EvFrState) -> int:
    return max(0, ev.soc - ev.x_min)


def available_import(ev: EvFrState) -> int:
    return max(0, ev.x_max - ev.soc)


@dataclass(frozen=True)
class FrConfig:
    const_ex: float = 0.1
    const_im: float = 0.1
    c_bd: int = 0


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrDispatch:
    """Signed kWh per EV (positive: EV exports to the grid) and the part of
    the imbalance left for the balancing market.
    """

    moves: dict[str, int]
    residual: int


def _largest_remainder(weights: dict[str, int], amount: int) -> dict[str, int]:
    total = sum(weights.values())
    if total == 0 or amount == 0:
        return {k: 0 for k in weights}
    out = {}
    rems = []
    for k, w in weights.items():
        q, r = divmod(w * amount, total)
        out[k] = q
        rems.append((-r, k))
    short = amount - sum(out.values())
    for _, k in sorted(rems)[:short]:
        out[k] += 1
    return out


def fr_dispatch(evs: Iterable[EvFrState], imbalance: int) -> FrDispatch:
    """Split ``imbalance`` over plugged EVs in proportion to their availability.

    ``imbalance > 0`` means the grid is short, so EVs export; ``< 0`` means a
    surplus that EVs absorb by charging. Whole kWh are handed out by largest
    remainder, ties going to the smaller ev_id.
    """
    plugged = sorted((ev for ev in evs if ev.plugged), key=lambda e: e.ev_id)
    if imbalance >= 0:
        avail = {ev.ev_id: available_export(ev) for ev in plugged}
    else:
        avail = {ev.ev_id: available_import(ev) for ev in plugged}
    amount = min(abs(imbalance), sum(avail.values()))
    split = _largest_remainder(avail, amount)
    sign = 1 if imbalance >= 0 else -1
    moves = {k: sign * v for k, v in split.items()}
    return FrDispatch(moves, imbalance - sum(moves.values()))


def apply_dispatch(evs: Iterable[EvFrState], dispatch: FrDispatch) -> list[EvFrState]:
    return [replace(ev, soc=ev.soc - dispatch.moves.get(ev.ev_id, 0)) for ev in evs]


# ---------------------------------------------------------------------------
# Ledger
# ---------------------------------------------------------------------------


@dataclass
class PeakLedger:
    """Per-EV exported and imported kWh at each hhp.

    Aggregates are taken over the block (peak or valley) containing the hhp,
    leaving that hhp out.
    """

    timeline: Timeline
    exported: dict[tuple[str, int], int] = field(default_factory=dict)
    imported: dict[tuple[str, int], int] = field(default_factory=dict)

    def record(self, ev_id: str, hhp: int, exported: int = 0, imported: int = 0) -> None:
        if exported < 0 or imported < 0:
            raise ValidationError("ledger entries must be >= 0")
        key = (ev_id, hhp)
        self.exported[key] = self.exported.get(key, 0) + exported
        self.imported[key] = self.imported.get(key, 0) + imported

    def record_dispatch(self, dispatch: FrDispatch, hhp: int) -> None:
        for ev_id, move in dispatch.moves.items():
            self.record(ev_id, hhp, exported=max(move, 0), imported=max(-move, 0))

    def exported_at(self, ev_id: str, hhp: int) -> int:
        return self.exported.get((ev_id, hhp), 0)

    def imported_at(self, ev_id: str, hhp: int) -> int:
        return self.imported.get((ev_id, hhp), 0)

    def _excluding(self, table, ev_id, hhp) -> int:
        block = self.timeline.block_of(hhp)
        return sum(table.get((ev_id, h), 0) for h in block.hhps if h != hhp)

    def exported_excluding(self, ev_id: str, hhp: int) -> int:
        return self._excluding(self.exported, ev_id, hhp)

    def imported_excluding(self, ev_id: str, hhp: int) -> int:
        return self._excluding(self.imported, ev_id, hhp)


# ---------------------------------------------------------------------------
# Payment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrQuote:
    """Payment to one EV for one hhp, in (fractional) milli-pence."""

    ev_id: str
    hhp: int
    export_term: float
    import_term: float
    delivery_term: float
    delivered: int = 0
    export_share: float = 0.0
    import_share: float = 0.0

    @property
    def payment(self) -> float:
        return self.export_term + self.import_term + self.delivery_term

    @property
    def payment_milli(self) -> int:
        return round(self.payment)


def _shares(values: dict[str, int]) -> dict[str, float]:
    total = sum(values.values())
    if total <= 0:
        return {k: 0.0 for k in values}
    return {k: v / total for k, v in values.items()}


def export_shares(plugged: Sequence[EvFrState], ledger: PeakLedger, hhp: int) -> dict[str, float]:
    return _shares(
        {ev.ev_id: available_export(ev) + ledger.exported_excluding(ev.ev_id, hhp) for ev in plugged}
    )


def import_shares(plugged: Sequence[EvFrState], ledger: PeakLedger, hhp: int) -> dict[str, float]:
    return _shares(
        {ev.ev_id: available_import(ev) + ledger.imported_excluding(ev.ev_id, hhp) for ev in plugged}
    )


def availability_sums(dist: SupplyDistribution | None, demand_hat: int) -> tuple[float, float]:
    """Expected supply on the shortfall side (y <= demand) and on the excess
    side (y >= demand), each weighted by y.
    """
    if dist is None:
        return 0.0, 0.0
    y, p = dist.grid, dist.pmf
    low = float((p * y)[y <= demand_hat].sum())
    high = float((p * y)[y >= demand_hat].sum())
    return low, high


def fr_payment(
    ev: EvFrState,
    hhp: int,
    active: ActiveSet,
    plugged: Sequence[EvFrState],
    ledger: PeakLedger,
    config: FrConfig,
    m_balancing: int,
    m_day_ahead: int,
    demand_hat: int,
) -> FrQuote:
    """Quote for ``ev`` at ``hhp``.

    ``plugged`` must contain ``ev``; shares use availability at the start of
    the hhp plus what each EV moved elsewhere in the same block. Delivered
    energy is read from the ledger, so record the hhp's dispatch first.
    """
    if ev.ev_id not in {q.ev_id for q in plugged}:
        raise ValidationError(f"EV {ev.ev_id} is not plugged at hhp {hhp}")
    dist = supply_distribution(active, hhp) if active.at(hhp).contracts else None
    low, high = availability_sums(dist, demand_hat)
    s_ex = export_shares(plugged, ledger, hhp)[ev.ev_id]
    s_im = import_shares(plugged, ledger, hhp)[ev.ev_id]
    delivered = ledger.exported_at(ev.ev_id, hhp)
    return FrQuote(
        ev_id=ev.ev_id,
        hhp=hhp,
        export_term=config.const_ex * low * m_balancing * s_ex,
        import_term=config.const_im * high * m_balancing * s_im,
        delivery_term=float(delivered * (config.c_bd + m_day_ahead)),
        delivered=delivered,
        export_share=s_ex,
        import_share=s_im,
    )


def fr_abstention_check(
    hs_expected_utility: float,
    quotes: Iterable[FrQuote],
    c_bd: int,
    m_imported: int,
) -> bool:
    """True when the fleet's EVs would earn strictly more, net of energy and
    wear costs, from frequency regulation than from scheduled contracts.
    """
    fr_net = sum(q.payment - q.delivered * (c_bd + m_imported) for q in quotes)
    return fr_net > hs_expected_utility
