"""Certificates that ``g(t) <= 1/mu(t)`` for solutions of the inequality.

The continuous condition checked at every time is

    G(t) = (1/mu) * (gamma - mu_dot/mu) - alpha(t, 1/mu) - beta >= 0

together with ``mu(0) g0 < 1`` (strict bound) or ``<= 1`` (non-strict bound).
The discrete analogue replaces ``mu_dot/mu`` by the forward difference
``(mu[n+1] - mu[n]) / (h[n] mu[n])`` and only yields the non-strict bound.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .problem import (
    ContinuousProblem,
    DiscreteProblem,
    MajorantCandidate,
    Monomial,
    PowerLawInstance,
    PowerLawMajorant,
    fpow,
    validate_problem,
)

__all__ = [
    "TOL_REFUTE",
    "InvalidMajorantError",
    "Verdict",
    "Mode",
    "GridSpec",
    "Certificate",
    "FeasibilityVerdict",
    "master_gap",
    "asymptotic_sign",
    "certify_grid",
    "check_powerlaw_closed_form",
    "certify_closed_form",
    "discrete_gap",
    "discrete_gaps",
    "certify_discrete",
]

TOL_REFUTE = 1e-12

# A gap whose magnitude is below this many ulps of the summed term
# magnitudes is indistinguishable from zero in double precision.
_NOISE_ULPS = 16 * np.finfo(float).eps


class InvalidMajorantError(ValueError):
    """mu(t) is not a positive finite number at some evaluation point."""


class Verdict(str, enum.Enum):
    CERTIFIED_STRICT = "CertifiedStrict"
    CERTIFIED_NON_STRICT = "CertifiedNonStrict"
    REFUTED = "Refuted"
    UNDECIDED = "Undecided"

    @property
    def certified(self) -> bool:
        return self in (Verdict.CERTIFIED_STRICT, Verdict.CERTIFIED_NON_STRICT)


class Mode(str, enum.Enum):
    CLOSED_FORM = "ClosedForm"
    GRID = "Grid"
    EXHAUSTIVE = "Exhaustive"


@dataclass(frozen=True)
class GridSpec:
    t_max: float = 100.0
    points: int = 1001
    spacing: str = "geometric"
    tail_check: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            raise ValueError(f"t_max must be positive and finite, got {self.t_max}")
        if int(self.points) != self.points or self.points < 2:
            raise ValueError(f"points must be an integer >= 2, got {self.points}")
        if self.spacing not in ("uniform", "geometric"):
            raise ValueError(f"spacing must be 'uniform' or 'geometric', got {self.spacing!r}")

    def times(self) -> np.ndarray:
        n = int(self.points)
        if self.spacing == "uniform":
            return np.linspace(0.0, self.t_max, n)
        # geometric in (1+t): dense near t=0 where power-law constraints are tightest
        t = np.expm1(np.linspace(0.0, math.log1p(self.t_max), n))
        t[0], t[-1] = 0.0, self.t_max
        return t


@dataclass(frozen=True)
class Certificate:
    verdict: Verdict
    mode: Mode
    bound: str
    worst_gap: float
    witness: float
    initial_product: float
    reason: str = ""
    grid: Optional[GridSpec] = None
    tail_sign: Optional[int] = None
    details: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.verdict.certified

    def to_dict(self) -> dict:
        out = {
            "verdict": self.verdict.value,
            "mode": self.mode.value,
            "bound": self.bound,
            "worst_gap": self.worst_gap,
            "witness": self.witness,
            "initial_product": self.initial_product,
            "reason": self.reason,
            "grid": asdict(self.grid) if self.grid is not None else None,
            "tail_sign": self.tail_sign,
        }
        out.update(self.details)
        return out


def _snap(total, scale):
    """Zero out sums that are pure rounding noise."""
    noise = np.abs(total) <= _NOISE_ULPS * scale
    if isinstance(total, np.ndarray):
        return np.where(noise, 0.0, total)
    return 0.0 if noise else float(total)


def _gap_terms(p: ContinuousProblem, m: MajorantCandidate, t):
    mu = m(t)
    bad = ~np.isfinite(mu) | (np.asarray(mu) <= 0)
    if np.any(bad):
        raise InvalidMajorantError(f"mu(t) must be positive and finite; {m!r} fails at t={t!r}")
    inv = 1.0 / mu
    # an overflowing alpha is a genuine -inf gap, not an error
    with np.errstate(over="ignore"):
        return (
            p.gamma(t) * inv,
            -m.derivative(t) * inv * inv,
            -p.alpha(t, inv),
            -p.beta(t),
        )


def master_gap(p: ContinuousProblem, m: MajorantCandidate, t):
    """Slack ``G(t)`` of the master inequality; accepts scalar or array ``t``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError(f"t must be nonnegative, got {t!r}")
    terms = _gap_terms(p, m, t)
    total = terms[0] + terms[1] + terms[2] + terms[3]
    scale = abs(terms[0]) + abs(terms[1]) + abs(terms[2]) + abs(terms[3])
    return _snap(total, scale)


def _tail_terms(p: ContinuousProblem, m: MajorantCandidate) -> list[Monomial]:
    inv = m.inverse_tail()
    return [
        p.gamma.tail() * inv,
        -m.growth_tail(),
        -(p.alpha.coefficient_tail() * inv ** float(p.alpha.p)),
        -p.beta.tail(),
    ]


def asymptotic_sign(p: ContinuousProblem, m: MajorantCandidate) -> int:
    """Sign of ``G(t)`` as ``t -> inf``: +1, -1, or 0 when every order cancels."""
    terms = [x for x in _tail_terms(p, m) if x.coef != 0]
    terms.sort(key=lambda x: (x.rate, x.power), reverse=True)
    i = 0
    while i < len(terms):
        lead = terms[i]
        group = [lead]
        i += 1
        while i < len(terms) and math.isclose(terms[i].rate, lead.rate, abs_tol=1e-12) and math.isclose(
            terms[i].power, lead.power, abs_tol=1e-12
        ):
            group.append(terms[i])
            i += 1
        total = _snap(math.fsum(x.coef for x in group), sum(abs(x.coef) for x in group))
        if total != 0:
            return 1 if total > 0 else -1
    return 0


def _tail_witness(p, m, t_start, tol_refute):
    """Search t = t_start * 2**k for a point with G < -tol_refute."""
    t = max(t_start, 1.0)
    for _ in range(1100):
        t *= 2.0
        if not math.isfinite(t):
            break
        try:
            with np.errstate(all="ignore"):
                g = master_gap(p, m, t)
        except (InvalidMajorantError, OverflowError, ZeroDivisionError):
            break
        if not math.isfinite(g):
            break
        if g < -tol_refute:
            return t, g
    return None


def certify_grid(
    p: ContinuousProblem,
    m: MajorantCandidate,
    gs: GridSpec = GridSpec(),
    tol_refute: float = TOL_REFUTE,
) -> Certificate:
    """Check the master inequality on a time grid plus the initial condition.

    With ``gs.tail_check`` the sign of the leading large-t term of ``G`` is
    also required to be nonnegative; a negative tail triggers a search for a
    refuting time beyond the grid.
    """
    report = validate_problem(p)
    if not report.ok:
        names = ", ".join(c.name for c in report.failures)
        raise ValueError(f"problem fails structural checks: {names}")

    ts = gs.times()
    gaps = master_gap(p, m, ts)
    k = int(np.argmin(gaps))
    worst, witness = float(gaps[k]), float(ts[k])
    init = float(m(0.0)) * p.g0
    tail = asymptotic_sign(p, m) if gs.tail_check else None

    def cert(verdict, reason="", **kw):
        return Certificate(
            verdict=verdict,
            mode=Mode.GRID,
            bound=m.describe(),
            worst_gap=kw.get("worst", worst),
            witness=kw.get("witness", witness),
            initial_product=init,
            reason=reason,
            grid=gs,
            tail_sign=tail,
        )

    if init > 1:
        return cert(Verdict.REFUTED, "initial_condition", witness=0.0)
    if worst < -tol_refute:
        return cert(Verdict.REFUTED, "negative_gap")
    if tail is not None and tail < 0:
        found = _tail_witness(p, m, gs.t_max, tol_refute)
        if found is not None:
            return cert(Verdict.REFUTED, "negative_tail", witness=found[0], worst=found[1])
        return cert(Verdict.UNDECIDED, "negative_tail")
    if worst < 0:
        return cert(Verdict.UNDECIDED, "gap_within_tolerance")
    if init < 1:
        return cert(Verdict.CERTIFIED_STRICT)
    return cert(Verdict.CERTIFIED_NON_STRICT)


# ---------------------------------------------------------------------------
# Closed form for the power-law family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeasibilityVerdict:
    conditions: dict
    amplitude_lhs: float
    slack: float
    strict: bool

    @property
    def feasible(self) -> bool:
        c = self.conditions
        return (
            c["nonlinear_decay"]
            and c["forcing_decay"]
            and c["drift_exponent"]
            and c["amplitude"]
            and c["initial_nonstrict"]
        )


def amplitude_lhs(inst: PowerLawInstance, lam: float, q: float) -> float:
    """``c0 / lam**(p-1) + c1 lam + q``; must not exceed ``r``."""
    nonlinear = 0.0 if inst.c0 == 0 else inst.c0 * fpow(lam, 1.0 - inst.p)
    return nonlinear + inst.c1 * lam + q


def check_powerlaw_closed_form(inst: PowerLawInstance, lam: float, q: float) -> FeasibilityVerdict:
    """Sufficient conditions for ``mu = lam (1+t)**q`` to be a valid majorant.

    Each of the three exponent conditions lets one term of the rescaled
    master inequality be dominated by ``(1+t)**-nu``; the amplitude
    condition then closes the inequality at every t >= 0.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if not q >= 0:
        raise ValueError(f"q must be nonnegative, got {q}")
    lhs = amplitude_lhs(inst, lam, q)
    conditions = {
        "nonlinear_decay": q * (inst.p - 1.0) >= inst.nu,
        "forcing_decay": inst.omega - q >= inst.nu,
        "drift_exponent": inst.nu <= 1.0,
        "amplitude": lhs <= inst.r,
        "initial_strict": inst.g0 * lam < 1.0,
        "initial_nonstrict": inst.g0 * lam <= 1.0,
    }
    return FeasibilityVerdict(conditions, lhs, inst.r - lhs, conditions["initial_strict"])


def certify_closed_form(inst: PowerLawInstance, lam: float, q: float) -> Certificate:
    """Closed-form certificate; failing the sufficient conditions only refutes
    when the initial condition itself is violated."""
    fv = check_powerlaw_closed_form(inst, lam, q)
    m = PowerLawMajorant(lam, q)
    init = lam * inst.g0
    if not fv.conditions["initial_nonstrict"]:
        verdict, reason = Verdict.REFUTED, "initial_condition"
    elif not fv.feasible:
        failed = [k for k in ("nonlinear_decay", "forcing_decay", "drift_exponent", "amplitude") if not fv.conditions[k]]
        verdict, reason = Verdict.UNDECIDED, "closed_form_conditions_failed: " + ",".join(failed)
    elif fv.strict:
        verdict, reason = Verdict.CERTIFIED_STRICT, ""
    else:
        verdict, reason = Verdict.CERTIFIED_NON_STRICT, ""
    return Certificate(
        verdict=verdict,
        mode=Mode.CLOSED_FORM,
        bound=m.describe(),
        worst_gap=fv.slack,
        witness=0.0,
        initial_product=init,
        reason=reason,
        details={"conditions": dict(fv.conditions), "amplitude_lhs": fv.amplitude_lhs},
    )


# ---------------------------------------------------------------------------
# Discrete version
# ---------------------------------------------------------------------------


def _check_mu_seq(d: DiscreteProblem, mu_seq) -> np.ndarray:
    mu = np.asarray(mu_seq, dtype=float)
    if mu.shape != (d.N + 1,):
        raise ValueError(f"mu sequence must have length N+1={d.N + 1}, got shape {mu.shape}")
    if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
        raise InvalidMajorantError("mu sequence must be positive and finite")
    return mu


def discrete_gaps(d: DiscreteProblem, mu_seq) -> np.ndarray:
    """All slacks ``D[n]`` for ``n = 0..N-1``."""
    mu = _check_mu_seq(d, mu_seq)
    cur, nxt = mu[:-1], mu[1:]
    inv = 1.0 / cur
    n = np.arange(d.N, dtype=float)
    terms = (
        d.gamma * inv,
        -(nxt - cur) / (d.h * cur) * inv,
        -d.alpha(n, inv),
        -d.beta,
    )
    total = terms[0] + terms[1] + terms[2] + terms[3]
    scale = np.abs(terms[0]) + np.abs(terms[1]) + np.abs(terms[2]) + np.abs(terms[3])
    return _snap(total, scale)


def discrete_gap(d: DiscreteProblem, mu_seq, n: int) -> float:
    if not 0 <= n < d.N:
        raise ValueError(f"n must lie in [0, {d.N}), got {n}")
    mu = _check_mu_seq(d, mu_seq)
    cur, nxt = mu[n], mu[n + 1]
    inv = 1.0 / cur
    terms = (
        d.gamma[n] * inv,
        -(nxt - cur) / (d.h[n] * cur) * inv,
        -d.alpha(float(n), inv),
        -d.beta[n],
    )
    return _snap(math.fsum(terms), sum(abs(x) for x in terms))


def certify_discrete(d: DiscreteProblem, mu_seq) -> Certificate:
    mu = _check_mu_seq(d, mu_seq)
    gaps = discrete_gaps(d, mu)
    k = int(np.argmin(gaps))
    worst = float(gaps[k])
    init = float(mu[0]) * d.g0

    if d.g0 > 1.0 / mu[0]:
        verdict, reason, witness = Verdict.REFUTED, "initial_condition", 0
    elif worst < 0:
        verdict, reason, witness = Verdict.REFUTED, "negative_gap", k
    else:
        verdict, reason, witness = Verdict.CERTIFIED_NON_STRICT, "", k
    return Certificate(
        verdict=verdict,
        mode=Mode.EXHAUSTIVE,
        bound="1/mu[n]",
        worst_gap=worst,
        witness=witness,
        initial_product=init,
        reason=reason,
        details={"N": d.N},
    )
