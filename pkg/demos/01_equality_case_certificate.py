"""
Certifying a decay envelope
===========================

A scalar quantity ``g(t) >= 0`` obeys

    g' <= -r/(1+t)**nu * g + c0 * g**p + c1/(1+t)**omega.

We guess ``1/mu(t) = 1/(lam (1+t)**q)`` as an envelope and ask the
certifier whether it is valid.  The instance below is tuned so that the
master inequality holds with equality at every t.
"""

import numpy as np

from gronwall import (
    GridSpec,
    PowerLawInstance,
    PowerLawMajorant,
    certify_closed_form,
    certify_grid,
    master_gap,
)

inst = PowerLawInstance(c0=1, p=2, c1=1, omega=2, r=3, nu=1, g0=0.5)
mu = PowerLawMajorant(lam=1.0, q=1.0)

# The gap G(t) is the slack in the master inequality.  Here it vanishes
# identically; the rounding-level residue is snapped to zero.
ts = np.linspace(0, 100, 1001)
print("max |G| on [0, 100]:", np.max(np.abs(master_gap(inst.problem(), mu, ts))))

# %%
# Closed-form mode checks the sufficient exponent and amplitude conditions
# directly; no sampling is involved.
cert = certify_closed_form(inst, mu.lam, mu.q)
print(cert.verdict.value, cert.details["conditions"])

# %%
# Grid mode samples G and also decides the sign of its leading large-t
# term, so a finite grid cannot hide a late violation.
cert = certify_grid(inst.problem(), mu, GridSpec(t_max=100, points=1001))
print(cert.verdict.value, "worst gap", cert.worst_gap, "tail sign", cert.tail_sign)

# %%
# Lowering r breaks the amplitude condition.  The grid certifier returns a
# witness time that reproduces the negative gap.
weak = inst.replace(r=2.5)
cert = certify_grid(weak.problem(), mu, GridSpec(t_max=100, points=1001))
print(cert.verdict.value, "at t =", cert.witness, "G =", master_gap(weak.problem(), mu, cert.witness))
