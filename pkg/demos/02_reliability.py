"""
How much of the contracted energy shows up?
===========================================

Bids and fines imply a floor on each contract's success probability. Treating
the contracts at an hhp as identical gives a binomial guess at what arrives.
"""

# %%
import numpy as np

from v2x_clearing.reliability import (
    ActiveContract, ActiveSet, lower_bound_report, monte_carlo_supply,
    prob_lower_bound, supply_distribution,
)

# A 100p fine on a contract bid at 20p in total: only worth offering if
# success is at least 80% likely.
print(prob_lower_bound(100_000, 20_000))

# %%
# Six equal contracts: the binomial is exact, Monte Carlo agrees.
act = ActiveSet(tuple(ActiveContract(f"c{i}", 0, 10, 0.7) for i in range(6)))
dist = supply_distribution(act, 0)
rng = np.random.default_rng(0)
mc = monte_carlo_supply([10] * 6, [0.7] * 6, 100_000, rng)
for y, p in zip(dist.grid, dist.pmf):
    print(f"{y:5.0f} kWh  binomial {p:.4f}  simulated {mc.get(int(y), 0.0):.4f}")

# %%
# Unequal contracts: the binomial only sees the mean size and the mean
# probability, so it puts its mass on a coarser grid than the real outcomes.
sizes, p_true = [4, 9, 15, 20], [0.9, 0.6, 0.8, 0.5]
p_hat = [p * 0.9 for p in p_true]
rep = lower_bound_report([(sizes, p_hat, p_true)], 100_000, rng, binned=True)
print(rep.summary())
