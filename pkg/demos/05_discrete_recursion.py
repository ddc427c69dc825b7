"""
The discrete inequality
=======================

For ``g[n+1] <= g[n] + h[n] (-gamma[n] g[n] + alpha(n, g[n]) + beta[n])``
a positive sequence ``mu`` certifies ``g[n] <= 1/mu[n]`` when every step
gap ``D[n]`` is nonnegative and ``g[0] <= 1/mu[0]``.  The check is
exhaustive over ``n``.
"""

import numpy as np

from gronwall import DiscreteProblem, PowerLaw, Zero, certify_discrete, discrete_gaps, run_discrete_recursion, verify_bound

d = DiscreteProblem(N=10, h=0.5, gamma=1.0, beta=0.0, alpha=Zero(), g0=0.4)
mu = np.full(11, 2.0)
print(certify_discrete(d, mu).verdict.value, "gaps", discrete_gaps(d, mu)[:3])

# %%
# A majorant that grows faster than the damping allows fails at every step.
fast = 2.0 ** np.arange(11)
cert = certify_discrete(d, fast)
print(cert.verdict.value, cert.reason, "first witness n =", cert.witness)

# %%
# Build a tight case: choose mu first, then the damping that makes every
# gap vanish.  The recursion, run as an equality, then tracks 1/mu exactly.
rng = np.random.default_rng(3)
n = 10_000
h = rng.uniform(0.05, 0.5, n)
growth = rng.uniform(0, 0.3, n)
mu = np.concatenate([[1.0], np.cumprod(1 + growth * h)])
c = 0.5
# use the realized growth of mu so rounding in cumprod does not leave a gap
rate = (mu[1:] - mu[:-1]) / (h * mu[:-1])
gamma = rate + c / mu[:-1]
tight = DiscreteProblem(N=n, h=h, gamma=gamma, beta=0.0, alpha=PowerLaw(c, 2), g0=1.0)
print(certify_discrete(tight, mu).verdict.value)
g = run_discrete_recursion(tight)
print("max g*mu - 1 =", verify_bound(g, mu).max_ratio - 1)
