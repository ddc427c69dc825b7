"""
Searching for the fastest certified decay
=========================================

For the power-law family the admissible ``(lam, q)`` pairs have a closed
description.  ``search_powerlaw`` picks ``lam`` minimizing the amplitude
term and then the largest admissible ``q``.
"""

from gronwall import PowerLawInstance, search_powerlaw, sweep_feasibility

base = PowerLawInstance(c0=1, p=2, c1=1, omega=2, r=3, nu=1, g0=0.5)

res = search_powerlaw(base)
print("canonical:", res.best, "q range", res.q_interval, "slack", res.slack)

# %%
# With more damping and faster forcing decay, q is limited by the forcing
# exponent instead of the amplitude.
res = search_powerlaw(base.replace(r=10, omega=5))
print("r=10, omega=5:", res.best)

# %%
# Sweeping the damping amplitude shows where certification starts.
for r, res in sweep_feasibility(base, "r", [2.0, 2.5, 3.0, 4.0, 8.0]):
    print(f"r={r:<4} feasible={res.feasible!s:<5} best={res.best}")

# %%
# The initial value must sit strictly below 1/lam.  Since the unconstrained
# minimizer is lam* = 1, feasibility is lost as g0 reaches 1.
for g0, res in sweep_feasibility(base, "g0", [0.5, 0.9, 0.999, 1.0, 1.2]):
    print(f"g0={g0:<6} feasible={res.feasible}")
