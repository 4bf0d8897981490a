"""Seeded end-to-end runs: clear, pay upfront, draw defaults, levy fines, run
frequency regulation on what is left, and report.

Random draws use numpy's PCG64 bit generator seeded with ``Scenario.seed``.
Accepted contracts are visited in ascending contract-id order and contract
``i`` draws ``u_i = Generator(PCG64(seed)).random()``, i.e.
``(next_uint64 >> 11) * 2**-53``; it is honoured iff ``u_i < p(j)``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .clearing import DEFAULT_STATE_BUDGET, Allocation, clear_bruteforce, clear_day
from .errors import MarketError, StageError, ValidationError
from .frequency import (
    EvFrState,
    FrConfig,
    PeakLedger,
    apply_dispatch,
    fr_dispatch,
    fr_payment,
)
from .model import (
    Bundle,
    Contract,
    ContractBook,
    DemandVector,
    FleetPrivate,
    PriceVector,
    Timeline,
    adjusted_demand,
    validate_book,
)
from .reliability import ActiveContract, ActiveSet, prob_lower_bound
from .vcg import payment_schedule


@dataclass(frozen=True)
class EvSpec:
    ev_id: str
    battery_capacity: int
    soc: int
    x_min: int
    x_max: int
    plugged_hhps: tuple[int, ...] = ()

    def state(self, plugged: bool = True) -> EvFrState:
        return EvFrState(self.ev_id, self.soc, self.x_min, self.x_max, self.battery_capacity, plugged)


@dataclass(frozen=True)
class CarbonFactors:
    """Illustrative emission factors in gCO2 per kWh."""

    grid: float = 200.0
    balancing: float = 600.0

    def __post_init__(self):
        if self.grid < 0 or self.balancing < 0:
            raise ValidationError("carbon factors must be >= 0")
        if self.balancing < self.grid:
            raise ValidationError("balancing factor must be >= grid factor")


@dataclass(frozen=True)
class Scenario:
    timeline: Timeline
    demand: DemandVector
    prices: Mapping[str, PriceVector]
    bundles: tuple[Bundle, ...] = ()
    contracts: tuple[Contract, ...] = ()
    fleets: tuple[FleetPrivate, ...] = ()
    evs: tuple[EvSpec, ...] = ()
    imbalance: tuple[int, ...] = ()
    fr: FrConfig = FrConfig()
    carbon: CarbonFactors = CarbonFactors()
    seed: int = 0

    def validate(self) -> ContractBook:
        n = self.timeline.hhp_count
        if len(self.demand) != n:
            raise ValidationError(f"demand has {len(self.demand)} entries, timeline {n}")
        for market in ("day-ahead", "balancing"):
            if market not in self.prices:
                raise ValidationError(f"missing {market} prices")
        for market, pv in self.prices.items():
            if len(pv) != n:
                raise ValidationError(f"{market} prices have {len(pv)} entries, timeline {n}")
        if self.imbalance and len(self.imbalance) != n:
            raise ValidationError(f"imbalance trace has {len(self.imbalance)} entries, timeline {n}")
        book = validate_book(self.contracts, self.bundles, self.timeline)
        fleets = {f.fleet_id: f for f in self.fleets}
        if len(fleets) != len(self.fleets):
            raise ValidationError("duplicate fleet id")
        for c in book.contracts:
            if c.fleet not in fleets:
                raise ValidationError(f"contract {c.contract_id}: fleet {c.fleet!r} has no private data")
            fleets[c.fleet].p(c.contract_id)
        ids = [e.ev_id for e in self.evs]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate ev id")
        for e in self.evs:
            e.state()
            if any(not 0 <= h < n for h in e.plugged_hhps):
                raise ValidationError(f"EV {e.ev_id}: plugged hhp outside the day")
        return book

    def fleet(self, fleet_id: str) -> FleetPrivate:
        for f in self.fleets:
            if f.fleet_id == fleet_id:
                return f
        raise ValidationError(f"unknown fleet {fleet_id!r}")

    @property
    def exogenous(self) -> tuple[int, ...]:
        return self.imbalance or (0,) * self.timeline.hhp_count


@dataclass(frozen=True)
class Settlement:
    allocation: Allocation
    payments: dict[str, int]
    honored: tuple[str, ...]
    defaulted: tuple[str, ...]
    fines: dict[str, int]
    demand_hat: tuple[int, ...]
    realized_supply: tuple[int, ...]
    unmet_demand: tuple[int, ...]
    fr_export: tuple[int, ...]
    fr_import: tuple[int, ...]
    balancing_kwh: tuple[int, ...]
    curtailed_kwh: tuple[int, ...]
    served_kwh: tuple[int, ...]
    balancing_cost: int
    fr_payments: dict[str, int]
    served_value: int
    fleet_utilities: dict[str, int]
    platform_utility: int
    carbon_g: float
    seed: int

    @property
    def payments_total(self) -> int:
        return sum(self.payments.values())

    @property
    def fines_total(self) -> int:
        return sum(self.fines.values())

    @property
    def fr_payments_total(self) -> int:
        return sum(self.fr_payments.values())

    @property
    def grid_kwh(self) -> int:
        """Energy delivered out of EV storage, all of it bought from the grid earlier."""
        return sum(self.realized_supply) + sum(self.fr_export)

    def cash_outflow(self) -> int:
        return self.payments_total + self.balancing_cost + self.fr_payments_total

    def cash_inflow(self) -> int:
        return self.fines_total + self.served_value

    def kpis(self) -> dict[str, Any]:
        return {
            "social_savings": self.allocation.value,
            "accepted": len(self.allocation.accepted),
            "defaulted": len(self.defaulted),
            "payments_total": self.payments_total,
            "fines_total": self.fines_total,
            "unmet_kwh": sum(self.unmet_demand),
            "served_kwh": sum(self.served_kwh),
            "fr_export_kwh": sum(self.fr_export),
            "fr_import_kwh": sum(self.fr_import),
            "balancing_kwh": sum(self.balancing_kwh),
            "curtailed_kwh": sum(self.curtailed_kwh),
            "balancing_cost": self.balancing_cost,
            "fr_payments_total": self.fr_payments_total,
            "served_value": self.served_value,
            "platform_utility": self.platform_utility,
            "carbon_g": self.carbon_g,
        }


def carbon_proxy(settlement: Settlement, factors: CarbonFactors) -> float:
    """Linear emission estimate: storage-served kWh at the grid factor plus
    balancing purchases at the balancing factor.
    """
    return factors.balancing * sum(settlement.balancing_kwh) + factors.grid * settlement.grid_kwh


def draw_defaults(
    accepted: Sequence[str], success: Mapping[str, float], seed: int
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Split accepted contracts into (honoured, defaulted) with one uniform draw each."""
    order = sorted(accepted)
    u = np.random.Generator(np.random.PCG64(seed)).random(len(order))
    honored = tuple(cid for cid, x in zip(order, u) if x < success[cid])
    defaulted = tuple(cid for cid, x in zip(order, u) if not x < success[cid])
    return honored, defaulted


def _fr_active(book: ContractBook, honored: Sequence[str]) -> ActiveSet:
    out = []
    for cid in honored:
        c = book.contract(cid)
        size = book.size(cid)
        # A zero fine carries no assurance about delivery.
        p = prob_lower_bound(c.fine, c.bid * size) if c.fine > 0 else 0.0
        out.append(ActiveContract(cid, c.hhp, size, p))
    return ActiveSet(tuple(out))


def _stage(name):
    def wrap(fn):
        def run(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except StageError:
                raise
            except MarketError as exc:
                raise StageError(name, exc) from exc
        return run
    return wrap


def run_scenario(
    s: Scenario,
    *,
    oracle: bool = False,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Settlement:
    book = _stage("validate")(s.validate)()
    n = s.timeline.hhp_count
    dhat = adjusted_demand(s.demand)
    m_da = s.prices["day-ahead"].prices
    m_b = s.prices["balancing"].prices

    if oracle:
        def clear(b, d, m):
            return clear_bruteforce(b, d, m)
    else:
        def clear(b, d, m):
            return clear_day(b, d, m, state_budget=state_budget)

    sched = _stage("clear")(payment_schedule)(book, dhat, m_da, clear=clear)
    alloc = sched.allocation
    payments = dict(sorted(sched.payments.items()))

    success = {c.contract_id: s.fleet(c.fleet).p(c.contract_id) for c in book.contracts}
    honored, defaulted = _stage("draw")(draw_defaults)(alloc.accepted, success, s.seed)

    fines: dict[str, int] = {f: 0 for f in book.fleets()}
    for cid in defaulted:
        c = book.contract(cid)
        fines[c.fleet] += c.fine

    realized = [0] * n
    for cid in honored:
        realized[book.contract(cid).hhp] += book.size(cid)
    unmet = [max(0, d - r) for d, r in zip(dhat, realized)]

    fr_out = _stage("fr")(_run_fr)(s, book, honored, dhat, realized)

    # Demand counts as served whatever covered it: contracts, FR exports or
    # balancing purchases.
    served_kwh = tuple(
        min(d, r + x + b)
        for d, r, x, b in zip(dhat, realized, fr_out["fr_export"], fr_out["balancing_kwh"])
    )
    served = sum(m * q for m, q in zip(m_da, served_kwh))

    utilities = {}
    for f in book.fleets():
        priv = s.fleet(f)
        cost = 0
        for cid in honored:
            c = book.contract(cid)
            if c.fleet == f:
                cost += (priv.m_imported + priv.c_bd) * book.size(cid) + priv.scheduling_cost
        for cid in defaulted:
            c = book.contract(cid)
            if c.fleet == f:
                cost += c.fine + priv.scheduling_cost
        utilities[f] = payments.get(f, 0) - cost

    platform = (
        served
        + sum(fines.values())
        - sum(payments.values())
        - fr_out["balancing_cost"]
        - sum(fr_out["fr_payments"].values())
    )
    settlement = Settlement(
        allocation=alloc,
        payments=payments,
        honored=honored,
        defaulted=defaulted,
        fines=fines,
        demand_hat=tuple(dhat),
        realized_supply=tuple(realized),
        unmet_demand=tuple(unmet),
        fr_export=fr_out["fr_export"],
        fr_import=fr_out["fr_import"],
        balancing_kwh=fr_out["balancing_kwh"],
        curtailed_kwh=fr_out["curtailed_kwh"],
        served_kwh=served_kwh,
        balancing_cost=fr_out["balancing_cost"],
        fr_payments=fr_out["fr_payments"],
        served_value=served,
        fleet_utilities=utilities,
        platform_utility=platform,
        carbon_g=0.0,
        seed=s.seed,
    )
    return dataclasses.replace(settlement, carbon_g=carbon_proxy(settlement, s.carbon))


def _run_fr(s: Scenario, book, honored, dhat, realized) -> dict:
    n = s.timeline.hhp_count
    m_da = s.prices["day-ahead"].prices
    m_b = s.prices["balancing"].prices
    active = _fr_active(book, honored)
    ledger = PeakLedger(s.timeline)
    states = {e.ev_id: e.state() for e in s.evs}
    plugged_at = {e.ev_id: set(e.plugged_hhps) for e in s.evs}
    fr_export = [0] * n
    fr_import = [0] * n
    balancing = [0] * n
    curtailed = [0] * n
    balancing_cost = 0
    pay = {e.ev_id: 0 for e in sorted(s.evs, key=lambda e: e.ev_id)}
    trace = s.exogenous
    for h in range(n):
        imbalance = dhat[h] - realized[h] + trace[h]
        plugged = [states[k] for k in sorted(states) if h in plugged_at[k]]
        dispatch = fr_dispatch(plugged, imbalance)
        ledger.record_dispatch(dispatch, h)
        for ev in apply_dispatch(plugged, dispatch):
            states[ev.ev_id] = ev
        fr_export[h] = sum(v for v in dispatch.moves.values() if v > 0)
        fr_import[h] = -sum(v for v in dispatch.moves.values() if v < 0)
        if dispatch.residual > 0:
            balancing[h] = dispatch.residual
            balancing_cost += dispatch.residual * m_b[h]
        else:
            curtailed[h] = -dispatch.residual
        for ev in plugged:
            q = fr_payment(ev, h, active, plugged, ledger, s.fr, m_b[h], m_da[h], dhat[h])
            pay[ev.ev_id] += q.payment_milli
    return {
        "fr_export": tuple(fr_export),
        "fr_import": tuple(fr_import),
        "balancing_kwh": tuple(balancing),
        "curtailed_kwh": tuple(curtailed),
        "balancing_cost": balancing_cost,
        "fr_payments": pay,
    }


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

AXIS_ALIASES = {
    "sm": "demand.safety_margin",
    "const_ex": "fr.const_ex",
    "const_im": "fr.const_im",
}


def _replace_path(obj, path: Sequence[str], value):
    name = path[0]
    if not dataclasses.is_dataclass(obj) or name not in {f.name for f in dataclasses.fields(obj)}:
        raise ValidationError(f"unknown axis component {name!r}")
    current = getattr(obj, name)
    if len(path) == 1:
        if dataclasses.is_dataclass(current) or isinstance(current, (tuple, list, dict)):
            raise ValidationError(f"axis {name!r} is not a scalar field")
        return dataclasses.replace(obj, **{name: type(current)(value)})
    return dataclasses.replace(obj, **{name: _replace_path(current, path[1:], value)})


def with_axis(base: Scenario, axis: str, value) -> Scenario:
    path = AXIS_ALIASES.get(axis, axis).split(".")
    return _replace_path(base, path, value)


def sweep(base: Scenario, axis: str, values: Sequence, **run_kwargs) -> list[dict[str, Any]]:
    """One KPI row per value of ``axis`` (a dotted scalar field path or alias)."""
    rows = []
    for v in values:
        settlement = run_scenario(with_axis(base, axis, v), **run_kwargs)
        rows.append({"axis": axis, "value": v, **settlement.kpis()})
    return rows
