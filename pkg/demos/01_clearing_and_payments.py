"""
Clearing a small export auction and paying the winners
=======================================================

Two fleets offer the same half hour. We pick the winners, look inside the
dynamic program, and work out who gets paid what.
"""

# %%
# Money is integer milli-pence, energy is integer kWh.
from v2x_clearing import (
    Bundle, Contract, build_timeline, clear_bruteforce, clear_day,
    format_pence, payment_schedule, peak_dp_tables, platform_utility,
    soc_save, validate_book,
)

timeline = build_timeline(3, [(1, 2)])   # valley, one-hhp peak, valley
book = validate_book(
    [Contract("a", "x", 3000, 1, "wx"), Contract("b", "y", 4000, 1, "wy")],
    [Bundle("wx", "x", 10), Bundle("wy", "y", 10)],
    timeline,
)
demand = [0, 10, 0]
prices = [0, 8000, 0]

# %%
# Accepting both overshoots demand, and the extra 10 kWh has no buyer.
for ids in ([], ["a"], ["b"], ["a", "b"]):
    print(f"{str(ids):12} saves {format_pence(soc_save(ids, book, demand, prices))}p")

# %%
alloc = clear_day(book, demand, prices)
print("accepted:", alloc.accepted, "value", format_pence(alloc.value))
assert alloc == clear_bruteforce(book, demand, prices)

# %%
# Each DP cell is the best set from the first r bundles when d kWh are
# still wanted.
tables = peak_dp_tables(book, demand, prices)
for r in range(len(tables.layers)):
    row = [tables.entry(r, [d]) for d in (0, 5, 10)]
    print(r, [(ids, format_pence(v)) for ids, v in row])

# %%
# The winner is paid what it adds to everyone else, so its own bid does not
# set its payment.
sched = payment_schedule(book, demand, prices)
for fleet, pay in sched.payments.items():
    print(fleet, format_pence(pay))
print("platform keeps", format_pence(platform_utility(book, demand, prices, sched)))
