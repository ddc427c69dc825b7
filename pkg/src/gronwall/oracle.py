"""Independent numerical checks of certified envelopes.

The scalar oracle integrates the equality case ``w' = -gamma w + alpha(t, w) + beta``,
whose solution dominates every solution of the inequality with the same
initial value.  The vector simulators integrate ``u`` itself and take norms
afterwards, so the norm is never differentiated.  Every continuous
integration is repeated at half the step and must agree with itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .integrators import rk4_batch_scalar, rk4_fixed, step_count
from .problem import (
    ContinuousProblem,
    DiscreteProblem,
    MajorantCandidate,
    PowerLawInstance,
    Tabulated,
    TimeFunction,
    ConstantMajorant,
    ExponentialMajorant,
    PowerLawMajorant,
    time_fn_checks,
    time_fn_integral,
    validate_problem,
)

__all__ = [
    "BLOWUP",
    "TOL_CHECK_CONTINUOUS",
    "TOL_CHECK_DISCRETE",
    "FiniteEscape",
    "ConvergenceError",
    "IntegrationError",
    "DivergenceError",
    "Trajectory",
    "LinearEvolutionSpec",
    "NonlinearEvolutionSpec",
    "BoundReport",
    "ProbeReport",
    "integrate_scalar_comparison",
    "integrate_scalar_comparison_many",
    "simulate_linear_evolution",
    "simulate_nonlinear_evolution",
    "run_discrete_recursion",
    "verify_bound",
    "dissipativity_probe",
]

BLOWUP = 1e12
TOL_CHECK_CONTINUOUS = 1e-8
TOL_CHECK_DISCRETE = 1e-12
HALVING_FACTOR = 10.0


class FiniteEscape(RuntimeError):
    """The solution left every bounded set in finite time."""

    def __init__(self, escape_time: float, trajectory: "Trajectory", coarse_escape_time: float = math.nan):
        super().__init__(f"finite-time escape near t={escape_time:.6g}")
        self.escape_time = escape_time
        self.coarse_escape_time = coarse_escape_time
        self.trajectory = trajectory


class ConvergenceError(RuntimeError):
    """The run at step h and the run at h/2 disagree."""


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_valid_time: float):
        super().__init__(f"{message} (last valid t={last_valid_time:.6g})")
        self.last_valid_time = last_valid_time


class DivergenceError(RuntimeError):
    def __init__(self, n: int, values: np.ndarray):
        super().__init__(f"discrete recursion overflowed at n={n}")
        self.n = n
        self.values = values


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled scalar trajectory ``g(t)`` (a norm, for vector systems)."""

    times: np.ndarray
    values: np.ndarray
    h: float
    integrator: str = "rk4"
    states: Optional[np.ndarray] = None
    halving_error: float = math.nan

    def __len__(self):
        return len(self.times)


def _halving_error(coarse: np.ndarray, fine: np.ndarray) -> float:
    diff = np.abs(coarse - fine)
    if diff.ndim > 1:
        diff = diff.max(axis=tuple(range(1, diff.ndim)))
    scale = max(1.0, float(np.max(np.abs(coarse))) if coarse.size else 1.0)
    return float(np.max(diff)) / scale


def _check_halving(err: float, tol: float):
    if not err <= HALVING_FACTOR * tol:
        raise ConvergenceError(
            f"step-halving disagreement {err:.3g} exceeds {HALVING_FACTOR * tol:.3g}; reduce h"
        )


def _run_with_halving(f, y0, t_max, h, *, clamp, tol, check_halving, norms):
    n = step_count(t_max, h)
    hh = t_max / n
    coarse = rk4_fixed(f, y0, hh, n, limit=BLOWUP, clamp=clamp)
    fine = rk4_fixed(f, y0, hh / 2, 2 * n, limit=BLOWUP, clamp=clamp, keep_every=2) if check_halving else None

    def traj(run, err=math.nan):
        vals = norms(run.states)
        states = None if run.states.ndim == 1 else run.states
        return Trajectory(run.times, vals, run.h, states=states, halving_error=err)

    if coarse.escaped or (fine is not None and fine.escaped):
        if fine is not None and coarse.escaped != fine.escaped:
            raise ConvergenceError("step halving disagrees on whether the solution escapes")
        t_esc = fine.escape_time if fine is not None else coarse.escape_time
        raise FiniteEscape(t_esc, traj(coarse), coarse.escape_time)

    if fine is None:
        return traj(coarse)
    err = _halving_error(coarse.states, fine.states)
    _check_halving(err, tol)
    return traj(coarse, err)


# ---------------------------------------------------------------------------
# Scalar comparison equation
# ---------------------------------------------------------------------------


def _require_valid(p: ContinuousProblem):
    report = validate_problem(p)
    if not report.ok:
        names = ", ".join(c.name for c in report.failures)
        raise ValueError(f"problem fails structural checks: {names}")


def _scalar_rhs(p: ContinuousProblem):
    gamma, alpha, beta = p.gamma, p.alpha, p.beta

    def f(t, w):
        return -gamma(t) * w + alpha(t, w if w > 0 else 0.0) + beta(t)

    return f


def integrate_scalar_comparison(
    p: ContinuousProblem,
    t_max: float,
    h: float,
    *,
    check_halving: bool = True,
    tol: float = TOL_CHECK_CONTINUOUS,
) -> Trajectory:
    """Upper solution of the inequality, by RK4 at step ``h`` (checked at ``h/2``).

    Raises ``FiniteEscape`` when ``w`` passes ``BLOWUP``.
    """
    _require_valid(p)
    return _run_with_halving(
        _scalar_rhs(p), float(p.g0), t_max, h, clamp=True, tol=tol, check_halving=check_halving, norms=np.abs
    )


def _stack_monomials(tails):
    c = np.array([m.coef for m in tails])
    power = np.array([m.power for m in tails])
    rate = np.array([m.rate for m in tails])
    if not rate.any():
        return lambda t: c * (1.0 + t) ** power
    return lambda t: c * (1.0 + t) ** power * np.exp(rate * t)


def _batchable(p: ContinuousProblem) -> bool:
    fns = [p.gamma, p.beta, getattr(p.alpha, "f", None)]
    return not any(isinstance(f, Tabulated) for f in fns)


def integrate_scalar_comparison_many(
    problems: Sequence[ContinuousProblem],
    t_max: float,
    h: float,
    *,
    check_halving: bool = True,
    tol: float = TOL_CHECK_CONTINUOUS,
) -> list[Trajectory]:
    """``integrate_scalar_comparison`` for many problems in one vectorized pass.

    Problems with tabulated data are integrated one at a time.  An escaping
    problem is re-run on its own so that ``FiniteEscape`` carries its details.
    """
    problems = list(problems)
    for p in problems:
        _require_valid(p)
    batch = [i for i, p in enumerate(problems) if _batchable(p)]
    result: list[Optional[Trajectory]] = [None] * len(problems)
    batch_set = set(batch)
    for i, p in enumerate(problems):
        if i not in batch_set:
            result[i] = integrate_scalar_comparison(p, t_max, h, check_halving=check_halving, tol=tol)
    if not batch:
        return result

    sel = [problems[i] for i in batch]
    # for non-tabulated families the tail monomial is the exact function
    gamma = _stack_monomials([p.gamma.tail() for p in sel])
    beta = _stack_monomials([p.beta.tail() for p in sel])
    alpha = _stack_monomials([p.alpha.coefficient_tail() for p in sel])
    expo = np.array([float(p.alpha.p) for p in sel])
    g0 = np.array([float(p.g0) for p in sel])

    def coefs(t):
        return gamma(t), alpha(t), beta(t)

    n = step_count(t_max, h)
    hh = t_max / n
    coarse, esc = rk4_batch_scalar(coefs, expo, g0, hh, n, limit=BLOWUP)
    if check_halving:
        fine, esc_fine = rk4_batch_scalar(coefs, expo, g0, hh / 2, 2 * n, limit=BLOWUP, keep_every=2)
        esc = esc | esc_fine
    times = np.arange(n + 1) * hh
    for lane, i in enumerate(batch):
        if esc[lane]:
            result[i] = integrate_scalar_comparison(problems[i], t_max, h, check_halving=check_halving, tol=tol)
            continue
        vals = coarse[:, lane]
        err = math.nan
        if check_halving:
            err = _halving_error(vals, fine[:, lane])
            _check_halving(err, tol)
        result[i] = Trajectory(times, vals, hh, halving_error=err)
    return result


# ---------------------------------------------------------------------------
# Finite-dimensional evolution systems
# ---------------------------------------------------------------------------


def _matrix(x, n, name):
    a = np.array(x, dtype=float)
    if a.shape != (n, n):
        raise ValueError(f"{name} must be {n}x{n}, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LinearEvolutionSpec:
    """``u' = (S + phi(t) diag(D)) u + psi(t) B0 u`` with ``S`` skew-symmetric."""

    S: np.ndarray
    D: np.ndarray
    phi: TimeFunction
    B0: np.ndarray
    psi: TimeFunction
    u0: np.ndarray

    def __post_init__(self):
        u0 = np.array(self.u0, dtype=float).reshape(-1)
        n = u0.size
        u0.setflags(write=False)
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "S", _matrix(self.S, n, "S"))
        object.__setattr__(self, "B0", _matrix(self.B0, n, "B0"))
        d = np.array(self.D, dtype=float).reshape(-1)
        if d.size != n:
            raise ValueError(f"D must list {n} diagonal entries, got {d.size}")
        d.setflags(write=False)
        object.__setattr__(self, "D", d)
        if not np.array_equal(self.S, -self.S.T):
            raise ValueError("S must be exactly skew-symmetric")
        if np.any(d > 0):
            raise ValueError("diagonal D must be nonpositive")
        for name in ("phi", "psi"):
            failed = [c.name for c in time_fn_checks(getattr(self, name), name) if not c.passed]
            if failed:
                raise ValueError(f"{name} fails: {', '.join(failed)}")
        if not math.isfinite(self.bound_exponent()):
            raise ValueError("the integral of ||B(t)|| over [0, inf) must be finite")

    @property
    def n(self) -> int:
        return self.u0.size

    def drift(self, t) -> np.ndarray:
        return self.S + self.phi(t) * np.diag(self.D)

    def perturbation(self, t) -> np.ndarray:
        return self.psi(t) * self.B0

    def bound_exponent(self) -> float:
        """``C = ||B0||_2 * integral of psi``."""
        norm_b0 = float(np.linalg.norm(self.B0, 2)) if self.B0.any() else 0.0
        if norm_b0 == 0.0:
            return 0.0
        return norm_b0 * time_fn_integral(self.psi)


@dataclass(frozen=True, eq=False)
class NonlinearEvolutionSpec:
    """``u' = -(r/(1+t)**nu) u + S u + c0 |u|**(p-1) u + (c1/(1+t)**omega) e1``."""

    r: float
    nu: float
    c0: float
    p: float
    c1: float
    omega: float
    u0: np.ndarray
    S: Optional[np.ndarray] = None

    def __post_init__(self):
        u0 = np.array(self.u0, dtype=float).reshape(-1)
        u0.setflags(write=False)
        object.__setattr__(self, "u0", u0)
        n = u0.size
        S = np.zeros((n, n)) if self.S is None else self.S
        object.__setattr__(self, "S", _matrix(S, n, "S"))
        if not np.array_equal(self.S, -self.S.T):
            raise ValueError("S must be exactly skew-symmetric")
        if not (self.r > 0 and self.nu > 0 and self.omega > 0):
            raise ValueError("r, nu and omega must be positive")
        if self.c0 < 0 or self.c1 < 0:
            raise ValueError("c0 and c1 must be nonnegative")
        if not self.p >= 1:
            raise ValueError(f"p must be at least 1, got {self.p}")

    @property
    def n(self) -> int:
        return self.u0.size

    def damping(self, t):
        return self.r * (1.0 + t) ** (-self.nu)

    def drift(self, t) -> np.ndarray:
        return self.S - self.damping(t) * np.eye(self.n)

    def instance(self) -> PowerLawInstance:
        """Scalar power-law inequality satisfied by ``||u(t)||``."""
        return PowerLawInstance(
            c0=self.c0, p=self.p, c1=self.c1, omega=self.omega, r=self.r, nu=self.nu,
            g0=float(np.linalg.norm(self.u0)),
        )


def _norms(states: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", states, states))


def simulate_linear_evolution(
    s: LinearEvolutionSpec,
    t_max: float,
    h: float,
    *,
    check_halving: bool = True,
    tol: float = TOL_CHECK_CONTINUOUS,
) -> tuple[Trajectory, float, float]:
    """Return ``(trajectory, sup ||u||, exp(C) ||u0||)``."""
    S, Dm, B0, phi, psi = s.S, np.diag(s.D), s.B0, s.phi, s.psi

    def f(t, u):
        return (S + phi(t) * Dm + psi(t) * B0) @ u

    traj = _run_with_halving(f, s.u0, t_max, h, clamp=False, tol=tol, check_halving=check_halving, norms=_norms)
    if not np.all(np.isfinite(traj.values)):
        bad = int(np.argmin(np.isfinite(traj.values)))
        raise IntegrationError("non-finite state", float(traj.times[max(bad - 1, 0)]))
    bound = math.exp(s.bound_exponent()) * float(np.linalg.norm(s.u0))
    return traj, float(np.max(traj.values)), bound


def simulate_nonlinear_evolution(
    s: NonlinearEvolutionSpec,
    t_max: float,
    h: float,
    *,
    check_halving: bool = True,
    tol: float = TOL_CHECK_CONTINUOUS,
) -> Trajectory:
    S, r, nu, c0, pm1, c1, omega = s.S, s.r, s.nu, s.c0, s.p - 1.0, s.c1, s.omega
    skew = bool(S.any())
    e1 = np.zeros(s.n)
    e1[0] = 1.0

    def f(t, u):
        g = math.sqrt(float(np.dot(u, u)))
        x = 1.0 + t
        out = (c0 * g**pm1 - r * x**-nu) * u + (c1 * x**-omega) * e1
        if skew:
            out = out + S @ u
        return out

    return _run_with_halving(f, s.u0, t_max, h, clamp=False, tol=tol, check_halving=check_halving, norms=_norms)


# ---------------------------------------------------------------------------
# Discrete recursion
# ---------------------------------------------------------------------------


def run_discrete_recursion(d: DiscreteProblem, limit: float = 1e300) -> np.ndarray:
    """Iterate the recursion as an equality; returns ``g[0..N]``."""
    decay = (1.0 - d.h * d.gamma).tolist()
    forcing = (d.h * d.beta).tolist()
    coef = (d.h * np.asarray(d.alpha.coefficient(np.arange(d.N, dtype=float)), dtype=float)).tolist()
    p = float(d.alpha.p)
    g = float(d.g0)
    out = [g]
    for n in range(d.N):
        try:
            g = decay[n] * g + coef[n] * g**p + forcing[n]
        except OverflowError:
            g = math.inf
        if not g <= limit:
            raise DivergenceError(n + 1, np.array(out))
        out.append(g)
    return np.array(out)


# ---------------------------------------------------------------------------
# Bound checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    satisfied: bool
    max_ratio: float
    first_violation: Optional[float]
    margin: float
    worst_at: float
    tol: float

    def to_dict(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "max_ratio": self.max_ratio,
            "first_violation": self.first_violation,
            "margin": self.margin,
            "worst_at": self.worst_at,
            "tol": self.tol,
        }


def _is_majorant(m) -> bool:
    return isinstance(m, (PowerLawMajorant, ExponentialMajorant, ConstantMajorant))


def verify_bound(
    traj: Union[Trajectory, Sequence[float], np.ndarray],
    m: Union[MajorantCandidate, Sequence[float], np.ndarray],
    tol: Optional[float] = None,
) -> BoundReport:
    """Check ``g * mu <= 1 + tol`` at every sample.

    A majorant object pairs with a ``Trajectory`` (default tol 1e-8); a
    sequence ``mu[n]`` pairs with a sequence ``g[n]`` (default tol 1e-12).
    """
    if _is_majorant(m):
        if not isinstance(traj, Trajectory):
            raise TypeError("a continuous majorant needs a Trajectory")
        tol = TOL_CHECK_CONTINUOUS if tol is None else tol
        with np.errstate(over="ignore"):
            ratio = traj.values * m(traj.times)
        where = traj.times
    else:
        tol = TOL_CHECK_DISCRETE if tol is None else tol
        values = traj.values if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
        mu = np.asarray(m, dtype=float)
        if mu.shape != values.shape:
            raise ValueError(f"range mismatch: {values.shape} samples against {mu.shape} majorant values")
        ratio = values * mu
        where = np.arange(values.size, dtype=float)
    if ratio.size == 0:
        raise ValueError("empty trajectory")
    ratio = np.where(np.isnan(ratio), np.inf, ratio)
    k = int(np.argmax(ratio))
    max_ratio = float(ratio[k])
    over = np.nonzero(ratio > 1.0 + tol)[0]
    first = float(where[over[0]]) if over.size else None
    return BoundReport(
        satisfied=max_ratio <= 1.0 + tol,
        max_ratio=max_ratio,
        first_violation=first,
        margin=1.0 - max_ratio,
        worst_at=float(where[k]),
        tol=tol,
    )


@dataclass(frozen=True)
class ProbeReport:
    ok: bool
    worst_violation: float
    worst_index: int
    values: tuple[float, ...] = field(default=())


def dissipativity_probe(
    s: Union[LinearEvolutionSpec, NonlinearEvolutionSpec],
    samples: Sequence[tuple[float, Sequence[float]]],
    tol: float = 1e-10,
) -> ProbeReport:
    """Check ``Re<A(t)u, u> <= 0`` (linear) or ``<= -(r/(1+t)**nu)|u|**2`` (nonlinear).

    ``values`` holds ``Re<A(t)u, u>`` per sample; the violation is how far it
    sits above the required bound.
    """
    if not samples:
        raise ValueError("need at least one (t, u) sample")
    values, violations = [], []
    for t, u in samples:
        u = np.asarray(u)
        a = s.drift(t)
        # only the Hermitian part enters the quadratic form; a skew part drops out exactly
        v = float(np.real(np.vdot(u, (0.5 * (a + a.conj().T)) @ u)))
        values.append(v)
        if isinstance(s, NonlinearEvolutionSpec):
            violations.append(v + s.damping(t) * float(np.real(np.vdot(u, u))))
        else:
            violations.append(v)
    k = int(np.argmax(violations))
    return ProbeReport(violations[k] <= tol, violations[k], k, tuple(values))
