"""
Cross-checking with the comparison ODE
======================================

The equality version of the inequality, ``w' = -gamma w + alpha(t, w) + beta``,
is the largest solution with the given initial value.  Integrating it with
RK4 gives an independent check of any certified envelope.
"""

import numpy as np

from gronwall import (
    Constant,
    ContinuousProblem,
    FiniteEscape,
    PowerLaw,
    PowerLawInstance,
    PowerLawMajorant,
    integrate_scalar_comparison,
    search_powerlaw,
    verify_bound,
)

inst = PowerLawInstance(c0=0.6, p=3, c1=0.4, omega=3, r=4, nu=0.8, g0=0.7)
res = search_powerlaw(inst)
mu = PowerLawMajorant(*res.best)
print("certified envelope:", mu.describe())

# Each run is repeated at half the step; the two must agree.
traj = integrate_scalar_comparison(inst.problem(), t_max=50.0, h=1e-3)
report = verify_bound(traj, mu)
print("max g*mu =", report.max_ratio, "halving error", traj.halving_error)

# %%
# Without damping, ``w' = w**2`` from ``w(0) = 1`` blows up at t = 1.  The
# oracle reports the escape time rather than returning garbage.
blowup = ContinuousProblem(Constant(0), PowerLaw(1, 2), Constant(0), g0=1.0)
try:
    integrate_scalar_comparison(blowup, t_max=5.0, h=1e-3)
except FiniteEscape as exc:
    print("finite escape near t =", exc.escape_time)
    last = exc.trajectory
    print("samples kept before the escape:", len(last), "last value", last.values[-1])

# %%
# Fourth-order convergence: halving the step cuts the error about 16-fold.
decay = ContinuousProblem(Constant(1), PowerLaw(0, 2), Constant(0), g0=1.0)
errs = []
for h in (1e-2, 5e-3):
    tr = integrate_scalar_comparison(decay, 1.0, h, check_halving=False)
    errs.append(abs(tr.values[-1] - np.exp(-1.0)))
print("error ratio", errs[0] / errs[1])
