"""
A simulated day
===============

Load the synthetic sample day, run it end to end, then sweep the safety
margin. Run ``python3 demos/make_sample_data.py`` first if ``data/`` is empty.
"""

# %%
from pathlib import Path

from v2x_clearing import emit_report, format_pence, load_scenario, run_scenario, sweep

ROOT = Path(__file__).resolve().parent.parent
scenario = load_scenario(ROOT / "data" / "sample_scenario.json")
settlement = run_scenario(scenario)
print(emit_report(settlement, "human").decode())

# %%
# Cash in minus cash out is the platform's result, to the milli-penny.
assert settlement.cash_inflow() - settlement.cash_outflow() == settlement.platform_utility

# %%
# A bigger margin buys more contracts up front; unmet kWh are measured
# against the raised target, so they need not fall.
for row in sweep(scenario, "sm", [0, 2, 4]):
    print(row["value"], row["accepted"], row["unmet_kwh"], row["balancing_kwh"], format_pence(row["platform_utility"]))

# %%
for row in sweep(scenario, "const_ex", [0.0, 0.1, 0.2]):
    print(row["value"], format_pence(row["fr_payments_total"]))
