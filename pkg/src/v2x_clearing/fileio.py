"""Price CSV, scenario files and settlement records.

Money is written as decimal pence with exactly three fraction digits (JSON
strings in scenario and record files) and held internally as integer
milli-pence. Field-by-field layouts are in ``docs/FORMATS.md``.
"""

from __future__ import annotations

import csv
import io
import json
from decimal import Decimal
from pathlib import Path
from typing import Any, Mapping

from .clearing import Allocation
from .errors import ValidationError
from .frequency import FrConfig
from .model import (
    MARKETS,
    Bundle,
    Contract,
    DemandVector,
    FleetPrivate,
    PriceVector,
    build_timeline,
    format_pence,
    pence,
)
from .simulator import CarbonFactors, EvSpec, Scenario, Settlement

SCHEMA_VERSION = 1
RECORD_VERSION = 1


# ---------------------------------------------------------------------------
# Prices
# ---------------------------------------------------------------------------


def parse_prices(text: str, hhp_count: int = 48) -> dict[str, PriceVector]:
    """Parse ``hhp,price,market`` rows; an optional header row is skipped."""
    rows: dict[str, dict[int, int]] = {}
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not f.strip() for f in row):
            continue
        if lineno == 1 and row[0].strip().lower() in ("hhp", "hhp_index"):
            continue
        if len(row) != 3:
            raise ValidationError(f"line {lineno}: expected 3 fields, got {len(row)}")
        hhp_s, price_s, market = (f.strip() for f in row)
        try:
            hhp = int(hhp_s)
            price = pence(price_s)
        except (ValueError, ValidationError) as exc:
            raise ValidationError(f"line {lineno}: malformed row {row!r} ({exc})") from None
        if "." in price_s and len(price_s.split(".")[1]) > 3:
            raise ValidationError(f"line {lineno}: more than 3 fraction digits")
        if market not in MARKETS:
            raise ValidationError(f"line {lineno}: unknown market {market!r}")
        if not 0 <= hhp < hhp_count:
            raise ValidationError(f"line {lineno}: hhp {hhp} outside [0, {hhp_count})")
        per = rows.setdefault(market, {})
        if hhp in per:
            raise ValidationError(f"line {lineno}: duplicate (hhp {hhp}, {market})")
        per[hhp] = price
    out = {}
    for market, per in rows.items():
        for h in range(hhp_count):
            if h not in per:
                raise ValidationError(f"missing hhp {h} ({market})")
        out[market] = PriceVector(tuple(per[h] for h in range(hhp_count)), market)
    return out


def load_prices(path, hhp_count: int = 48) -> dict[str, PriceVector]:
    return parse_prices(Path(path).read_text(), hhp_count)


def dump_prices(prices: Mapping[str, PriceVector]) -> str:
    lines = ["hhp,price,market"]
    for market in MARKETS:
        if market in prices:
            for h, p in enumerate(prices[market]):
                lines.append(f"{h},{format_pence(p)},{market}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Scenario files
# ---------------------------------------------------------------------------


def _check_keys(obj: Mapping, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(obj, Mapping):
        raise ValidationError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ValidationError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ValidationError(f"{where}: missing field(s) {sorted(missing)}")


def _money(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, (str, int, Decimal)):
        raise ValidationError(f"{where}: money must be a decimal string or number")
    try:
        return pence(x)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _int(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ValidationError(f"{where}: expected an integer")
    return x


def _float(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, Decimal, float)):
        raise ValidationError(f"{where}: expected a number")
    return float(x)


def scenario_from_dict(doc: Mapping[str, Any], base_dir: Path | None = None) -> Scenario:
    _check_keys(
        doc,
        {"schema_version", "hhp_count", "peaks", "demand", "prices", "prices_csv",
         "bundles", "contracts", "fleets", "evs", "imbalance", "fr", "carbon", "seed"},
        {"schema_version", "hhp_count", "peaks", "demand"},
        "scenario",
    )
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ValidationError(
            f"scenario: schema_version {doc['schema_version']!r} not supported (want {SCHEMA_VERSION})"
        )
    n = _int(doc["hhp_count"], "hhp_count")
    timeline = build_timeline(n, [tuple(_int(x, "peaks") for x in r) for r in doc["peaks"]])

    d = doc["demand"]
    _check_keys(d, {"kwh", "safety_margin"}, {"kwh"}, "demand")
    demand = DemandVector(
        tuple(_int(x, "demand.kwh") for x in d["kwh"]), _int(d.get("safety_margin", 0), "demand.safety_margin")
    )

    if ("prices" in doc) == ("prices_csv" in doc):
        raise ValidationError("scenario: give exactly one of prices / prices_csv")
    if "prices" in doc:
        _check_keys(doc["prices"], set(MARKETS), set(), "prices")
        prices = {
            m: PriceVector(tuple(_money(x, f"prices.{m}") for x in v), m)
            for m, v in doc["prices"].items()
        }
    else:
        path = Path(doc["prices_csv"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        prices = load_prices(path, n)

    bundles = []
    for i, b in enumerate(doc.get("bundles", [])):
        _check_keys(b, {"id", "fleet", "size"}, {"id", "fleet", "size"}, f"bundles[{i}]")
        bundles.append(Bundle(str(b["id"]), str(b["fleet"]), _int(b["size"], f"bundles[{i}].size")))

    contracts = []
    for i, c in enumerate(doc.get("contracts", [])):
        w = f"contracts[{i}]"
        _check_keys(c, {"id", "fleet", "bid", "hhp", "bundle", "fine"}, {"id", "fleet", "bid", "hhp", "bundle"}, w)
        contracts.append(
            Contract(
                str(c["id"]), str(c["fleet"]), _money(c["bid"], w + ".bid"), _int(c["hhp"], w + ".hhp"),
                str(c["bundle"]), _money(c.get("fine", 0), w + ".fine"),
            )
        )

    fleets = []
    for i, f in enumerate(doc.get("fleets", [])):
        w = f"fleets[{i}]"
        _check_keys(f, {"id", "success_prob", "m_imported", "c_bd", "scheduling_cost"}, {"id", "success_prob"}, w)
        fleets.append(
            FleetPrivate(
                str(f["id"]),
                {str(k): _float(v, w + ".success_prob") for k, v in f["success_prob"].items()},
                _money(f.get("m_imported", 0), w + ".m_imported"),
                _money(f.get("c_bd", 0), w + ".c_bd"),
                _money(f.get("scheduling_cost", 0), w + ".scheduling_cost"),
            )
        )

    evs = []
    for i, e in enumerate(doc.get("evs", [])):
        w = f"evs[{i}]"
        _check_keys(e, {"id", "capacity", "soc", "x_min", "x_max", "plugged"}, {"id", "capacity", "soc", "x_min", "x_max"}, w)
        evs.append(
            EvSpec(
                str(e["id"]), _int(e["capacity"], w), _int(e["soc"], w), _int(e["x_min"], w),
                _int(e["x_max"], w), tuple(_int(h, w + ".plugged") for h in e.get("plugged", [])),
            )
        )

    fr = FrConfig()
    if "fr" in doc:
        _check_keys(doc["fr"], {"const_ex", "const_im", "c_bd"}, set(), "fr")
        fr = FrConfig(
            _float(doc["fr"].get("const_ex", fr.const_ex), "fr.const_ex"),
            _float(doc["fr"].get("const_im", fr.const_im), "fr.const_im"),
            _money(doc["fr"].get("c_bd", 0), "fr.c_bd"),
        )
    carbon = CarbonFactors()
    if "carbon" in doc:
        _check_keys(doc["carbon"], {"grid", "balancing"}, set(), "carbon")
        carbon = CarbonFactors(
            _float(doc["carbon"].get("grid", carbon.grid), "carbon.grid"),
            _float(doc["carbon"].get("balancing", carbon.balancing), "carbon.balancing"),
        )

    scenario = Scenario(
        timeline=timeline,
        demand=demand,
        prices=prices,
        bundles=tuple(bundles),
        contracts=tuple(contracts),
        fleets=tuple(fleets),
        evs=tuple(evs),
        imbalance=tuple(_int(x, "imbalance") for x in doc.get("imbalance", [])),
        fr=fr,
        carbon=carbon,
        seed=_int(doc.get("seed", 0), "seed"),
    )
    scenario.validate()
    return scenario


def _loads(text: str) -> Any:
    return json.loads(text, parse_float=Decimal)


def loads_scenario(text: str, base_dir: Path | None = None) -> Scenario:
    return scenario_from_dict(_loads(text), base_dir)


def load_scenario(path) -> Scenario:
    path = Path(path)
    return loads_scenario(path.read_text(), path.parent)


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "hhp_count": s.timeline.hhp_count,
        "peaks": [list(r) for r in s.timeline.peak_ranges()],
        "demand": {"kwh": list(s.demand.demand), "safety_margin": s.demand.safety_margin},
        "prices": {m: [format_pence(p) for p in s.prices[m]] for m in MARKETS if m in s.prices},
        "bundles": [{"id": b.bundle_id, "fleet": b.owner_fleet, "size": b.size} for b in s.bundles],
        "contracts": [
            {"id": c.contract_id, "fleet": c.fleet, "bid": format_pence(c.bid), "hhp": c.hhp,
             "bundle": c.bundle, "fine": format_pence(c.fine)}
            for c in s.contracts
        ],
        "fleets": [
            {"id": f.fleet_id, "success_prob": {k: float(v) for k, v in f.success_prob.items()},
             "m_imported": format_pence(f.m_imported), "c_bd": format_pence(f.c_bd),
             "scheduling_cost": format_pence(f.scheduling_cost)}
            for f in s.fleets
        ],
        "evs": [
            {"id": e.ev_id, "capacity": e.battery_capacity, "soc": e.soc, "x_min": e.x_min,
             "x_max": e.x_max, "plugged": list(e.plugged_hhps)}
            for e in s.evs
        ],
        "imbalance": list(s.imbalance),
        "fr": {"const_ex": s.fr.const_ex, "const_im": s.fr.const_im, "c_bd": format_pence(s.fr.c_bd)},
        "carbon": {"grid": s.carbon.grid, "balancing": s.carbon.balancing},
        "seed": s.seed,
    }


def dumps_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


# ---------------------------------------------------------------------------
# Settlement records
# ---------------------------------------------------------------------------

_MONEY_KPIS = {
    "social_savings", "payments_total", "fines_total", "balancing_cost",
    "fr_payments_total", "served_value", "platform_utility",
}


def _money_map(d: Mapping[str, int]) -> dict[str, str]:
    return {k: format_pence(v) for k, v in sorted(d.items())}


def settlement_to_record(s: Settlement) -> dict[str, Any]:
    kpis = {k: (format_pence(v) if k in _MONEY_KPIS else v) for k, v in s.kpis().items()}
    return {
        "record_version": RECORD_VERSION,
        "seed": s.seed,
        "kpis": kpis,
        "allocation": {
            "accepted": list(s.allocation.accepted),
            "social_savings": format_pence(s.allocation.value),
            "per_hhp_supply": list(s.allocation.per_hhp_supply),
        },
        "payments": _money_map(s.payments),
        "honored": list(s.honored),
        "defaulted": list(s.defaulted),
        "fines": _money_map(s.fines),
        "demand_hat": list(s.demand_hat),
        "realized_supply": list(s.realized_supply),
        "unmet_demand": list(s.unmet_demand),
        "fr_export": list(s.fr_export),
        "fr_import": list(s.fr_import),
        "balancing_kwh": list(s.balancing_kwh),
        "curtailed_kwh": list(s.curtailed_kwh),
        "served_kwh": list(s.served_kwh),
        "balancing_cost": format_pence(s.balancing_cost),
        "fr_payments": _money_map(s.fr_payments),
        "served_value": format_pence(s.served_value),
        "fleet_utilities": _money_map(s.fleet_utilities),
        "platform_utility": format_pence(s.platform_utility),
        "carbon_g": s.carbon_g,
    }


def emit_report(settlement: Settlement, fmt: str = "machine") -> bytes:
    """Render a settlement as a machine record (stable JSON) or a human table."""
    if fmt in ("machine", "json", "machine-record"):
        return (json.dumps(settlement_to_record(settlement), indent=2) + "\n").encode()
    if fmt in ("human", "table", "human-table"):
        return human_table(settlement).encode()
    raise ValidationError(f"unknown report format {fmt!r}")


def settlement_from_record(rec: Mapping[str, Any]) -> Settlement:
    if rec.get("record_version") != RECORD_VERSION:
        raise ValidationError(f"record_version {rec.get('record_version')!r} not supported")

    def money_map(d):
        return {k: pence(v) for k, v in d.items()}

    alloc = rec["allocation"]
    return Settlement(
        allocation=Allocation(
            tuple(alloc["accepted"]), pence(alloc["social_savings"]), tuple(alloc["per_hhp_supply"])
        ),
        payments=money_map(rec["payments"]),
        honored=tuple(rec["honored"]),
        defaulted=tuple(rec["defaulted"]),
        fines=money_map(rec["fines"]),
        demand_hat=tuple(rec["demand_hat"]),
        realized_supply=tuple(rec["realized_supply"]),
        unmet_demand=tuple(rec["unmet_demand"]),
        fr_export=tuple(rec["fr_export"]),
        fr_import=tuple(rec["fr_import"]),
        balancing_kwh=tuple(rec["balancing_kwh"]),
        curtailed_kwh=tuple(rec["curtailed_kwh"]),
        served_kwh=tuple(rec["served_kwh"]),
        balancing_cost=pence(rec["balancing_cost"]),
        fr_payments=money_map(rec["fr_payments"]),
        served_value=pence(rec["served_value"]),
        fleet_utilities=money_map(rec["fleet_utilities"]),
        platform_utility=pence(rec["platform_utility"]),
        carbon_g=float(rec["carbon_g"]),
        seed=int(rec["seed"]),
    )


def load_report(data: bytes | str) -> Settlement:
    if isinstance(data, bytes):
        data = data.decode()
    return settlement_from_record(json.loads(data))


def human_table(s: Settlement) -> str:
    out = io.StringIO()
    out.write(f"seed {s.seed}\n")
    out.write(f"accepted contracts: {', '.join(s.allocation.accepted) or '-'}\n")
    out.write(f"defaulted:          {', '.join(s.defaulted) or '-'}\n\n")
    out.write(f"{'fleet':<12}{'payment':>14}{'fine':>14}{'utility':>14}\n")
    for f in sorted(set(s.payments) | set(s.fines)):
        out.write(
            f"{f:<12}{format_pence(s.payments.get(f, 0)):>14}"
            f"{format_pence(s.fines.get(f, 0)):>14}{format_pence(s.fleet_utilities.get(f, 0)):>14}\n"
        )
    out.write("\n")
    for k, v in s.kpis().items():
        shown = format_pence(v) if k in _MONEY_KPIS else v
        out.write(f"{k:<20}{shown:>16}\n")
    return out.getvalue()
