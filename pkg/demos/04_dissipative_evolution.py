"""
Dissipative linear and nonlinear systems
========================================

A linear system ``u' = (S + phi(t) D + psi(t) B0) u`` with skew-symmetric
``S`` and ``D <= 0`` only grows through the integrable perturbation, so
``|u(t)| <= exp(C) |u0|`` with ``C = |B0| * integral of psi``.
"""

import numpy as np

from gronwall import (
    Constant,
    ExponentialDecay,
    LinearEvolutionSpec,
    NonlinearEvolutionSpec,
    PowerLawMajorant,
    dissipativity_probe,
    simulate_linear_evolution,
    simulate_nonlinear_evolution,
    verify_bound,
)

# The scalar case u' = exp(-t) u attains the bound in the limit:
# u(t) = exp(1 - exp(-t)) -> e.
spec = LinearEvolutionSpec([[0]], [0], Constant(0), [[1]], ExponentialDecay(1, 1), [1])
traj, sup, bound = simulate_linear_evolution(spec, t_max=20.0, h=1e-3)
print(f"C = {spec.bound_exponent()}, sup |u| = {sup:.9f}, bound = {bound:.9f}")

# %%
# A pure rotation conserves the norm.
rot = LinearEvolutionSpec([[0, 1], [-1, 0]], [0, 0], Constant(0), np.zeros((2, 2)), Constant(0), [1, 0])
traj, _, _ = simulate_linear_evolution(rot, t_max=10.0, h=1e-3)
print("norm drift:", np.max(np.abs(traj.values - 1)))
print("<Su, u> at a sample:", dissipativity_probe(rot, [(0.0, [0.3, -2.0])]).values)

# %%
# The nonlinear system adds c0 |u|**(p-1) u and a decaying forcing.  Its
# norm satisfies the scalar power-law inequality, so the envelope found for
# that inequality bounds the vector solution too.
nl = NonlinearEvolutionSpec(r=3, nu=1, c0=1, p=2, c1=1, omega=2, u0=[0.5, 0], S=[[0, 2], [-2, 0]])
traj = simulate_nonlinear_evolution(nl, t_max=50.0, h=1e-3)
print("max |u|(1+t):", np.max(traj.values * (1 + traj.times)))
print(verify_bound(traj, PowerLawMajorant(1, 1)))
