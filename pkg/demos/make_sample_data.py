"""Write the synthetic sample day used by the README and the CLI examples.

    python3 demos/make_sample_data.py

Produces ``data/prices_sample.csv`` and ``data/sample_scenario.json``. The
prices are made up: a flat night, a morning and an evening hump. Nothing here
is market data.
"""

import json
import math
from pathlib import Path

from v2x_clearing import PriceVector, dump_prices, format_pence

ROOT = Path(__file__).resolve().parent.parent
PEAKS = [(0, 1), (16, 24), (34, 48)]


def day_ahead(h):
    # milli-pence per kWh
    base = 6500
    morning = 5500 * math.exp(-((h - 19) / 3.0) ** 2)
    evening = 11000 * math.exp(-((h - 37) / 3.5) ** 2)
    return int(round(base + morning + evening, -1))


def main():
    da = PriceVector(tuple(day_ahead(h) for h in range(48)), "day-ahead")
    bal = PriceVector(tuple(p * 3 // 2 for p in da), "balancing")
    (ROOT / "data").mkdir(exist_ok=True)
    (ROOT / "data" / "prices_sample.csv").write_text(dump_prices({"day-ahead": da, "balancing": bal}))

    demand = [0] * 48
    for h in range(17, 23):
        demand[h] = 12
    for h in range(35, 42):
        demand[h] = 16

    bundles, contracts, fleets = [], [], []
    fleet_specs = {
        "north": {"bid": "7.000", "fine": "120.000", "p": 0.95, "size": 10, "hhps": [18, 19, 36, 37]},
        "south": {"bid": "8.500", "fine": "90.000", "p": 0.85, "size": 8, "hhps": [19, 20, 37, 38, 39]},
        "depot": {"bid": "6.000", "fine": "200.000", "p": 0.98, "size": 15, "hhps": [36, 38, 40]},
    }
    for fleet, spec in fleet_specs.items():
        probs = {}
        for peak in (1, 2):
            hhps = [h for h in spec["hhps"] if (h < 24) == (peak == 1)]
            for b in range(2):
                bundle_id = f"{fleet}-p{peak}-w{b}"
                bundles.append({"id": bundle_id, "fleet": fleet, "size": spec["size"]})
                for h in hhps:
                    if (b + h) % 3 == 0:
                        continue
                    cid = f"{bundle_id}-h{h:02d}"
                    contracts.append({"id": cid, "fleet": fleet, "bid": spec["bid"], "hhp": h,
                                      "bundle": bundle_id, "fine": spec["fine"]})
                    probs[cid] = spec["p"]
        fleets.append({"id": fleet, "success_prob": probs, "m_imported": "3.000",
                       "c_bd": "1.500", "scheduling_cost": "0.500"})

    evs = []
    for i in range(6):
        plugged = list(range(16, 24)) if i % 2 == 0 else list(range(34, 44))
        evs.append({"id": f"ev{i}", "capacity": 60, "soc": 30 + 3 * i, "x_min": 12,
                    "x_max": 54, "plugged": plugged})
    imbalance = [0] * 48
    for h, v in {18: 4, 20: -3, 36: 6, 37: -5, 39: 2, 41: -2}.items():
        imbalance[h] = v

    doc = {
        "schema_version": 1,
        "hhp_count": 48,
        "peaks": [list(r) for r in PEAKS],
        "demand": {"kwh": demand, "safety_margin": 0},
        "prices_csv": "prices_sample.csv",
        "bundles": bundles,
        "contracts": contracts,
        "fleets": fleets,
        "evs": evs,
        "imbalance": imbalance,
        "fr": {"const_ex": 0.1, "const_im": 0.1, "c_bd": "1.500"},
        "carbon": {"grid": 200.0, "balancing": 600.0},
        "seed": 2024,
    }
    (ROOT / "data" / "sample_scenario.json").write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {len(contracts)} contracts over {len(bundles)} bundles; "
          f"evening peak price {format_pence(max(da))} p/kWh")


if __name__ == "__main__":
    main()
