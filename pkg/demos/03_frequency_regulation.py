"""
Frequency regulation through one evening peak
=============================================

Plugged-in EVs soak up the gap between contracted and needed energy. Each
tick splits the gap by availability and pays every EV a quote.
"""

# %%
from v2x_clearing import build_timeline, format_pence
from v2x_clearing.frequency import (
    EvFrState, FrConfig, PeakLedger, apply_dispatch, fr_dispatch, fr_payment,
)
from v2x_clearing.reliability import ActiveContract, ActiveSet

timeline = build_timeline(8, [(2, 6)])
evs = [
    EvFrState("van", soc=40, x_min=12, x_max=48, battery_capacity=60),
    EvFrState("car", soc=25, x_min=10, x_max=36, battery_capacity=40),
]
contracts = ActiveSet(tuple(ActiveContract(f"c{h}{i}", h, 8, 0.8) for h in range(2, 6) for i in range(2)))
ledger = PeakLedger(timeline)
config = FrConfig(const_ex=0.1, const_im=0.1, c_bd=1500)

# %%
# Positive imbalance: the grid is short and EVs discharge.
for h, imbalance in zip(range(2, 6), [6, -4, 9, 3]):
    d = fr_dispatch(evs, imbalance)
    ledger.record_dispatch(d, h)
    quotes = [fr_payment(e, h, contracts, evs, ledger, config, 13500, 9000, 16) for e in evs]
    evs = apply_dispatch(evs, d)
    paid = ", ".join(f"{q.ev_id} {format_pence(q.payment_milli)}p" for q in quotes)
    print(f"hhp {h}: imbalance {imbalance:+d} moves {d.moves} residual {d.residual:+d}  | {paid}")

# %%
print({e.ev_id: e.soc for e in evs})
