"""Inequality instances, majorant candidates and their pointwise evaluation.

Everything here is an immutable value type.  Time functions and
nonlinearities come from small closed families so that nonnegativity,
monotonicity and the Lipschitz requirement can be decided from the
parameters alone, and so that the large-t behaviour of every expression
built from them is a finite sum of terms ``coef * (1+t)**power * exp(rate*t)``.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

__all__ = [
    "DomainError",
    "Monomial",
    "Constant",
    "RationalDecay",
    "ExponentialDecay",
    "Tabulated",
    "TimeFunction",
    "Zero",
    "PowerLaw",
    "Separable",
    "NonlinearTerm",
    "PowerLawMajorant",
    "ExponentialMajorant",
    "ConstantMajorant",
    "MajorantCandidate",
    "ContinuousProblem",
    "PowerLawInstance",
    "DiscreteProblem",
    "Check",
    "ValidationReport",
    "eval_time_fn",
    "eval_nonlinearity",
    "mu_eval",
    "time_fn_integral",
    "time_fn_checks",
    "validate_problem",
    "fpow",
]


class DomainError(ValueError):
    """Raised when a function is evaluated outside t >= 0 or g >= 0."""


def _exp(x):
    if isinstance(x, np.ndarray):
        return np.exp(x)
    return math.exp(x)


def fpow(x: float, e: float) -> float:
    """``x**e`` for floats, saturating to ``inf`` instead of raising."""
    try:
        return x**e
    except OverflowError:
        return math.inf


def _check_t(t):
    if np.any(np.asarray(t) < 0):
        raise DomainError(f"time must be nonnegative, got {t!r}")


@dataclass(frozen=True)
class Monomial:
    """The term ``coef * (1+t)**power * exp(rate*t)``."""

    coef: float
    power: float = 0.0
    rate: float = 0.0

    def __mul__(self, other: Monomial) -> Monomial:
        return Monomial(self.coef * other.coef, self.power + other.power, self.rate + other.rate)

    def __pow__(self, p: float) -> Monomial:
        return Monomial(fpow(self.coef, p), self.power * p, self.rate * p)

    def __neg__(self) -> Monomial:
        return Monomial(-self.coef, self.power, self.rate)


# ---------------------------------------------------------------------------
# Time functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    c: float

    def __call__(self, t):
        if isinstance(t, np.ndarray):
            return np.full(t.shape, float(self.c))
        return float(self.c)

    def tail(self) -> Monomial:
        return Monomial(float(self.c))


@dataclass(frozen=True)
class RationalDecay:
    """``c / (1+t)**e``."""

    c: float
    e: float

    def __call__(self, t):
        return self.c * (1.0 + t) ** (-self.e)

    def tail(self) -> Monomial:
        return Monomial(float(self.c), -float(self.e))


@dataclass(frozen=True)
class ExponentialDecay:
    """``c * exp(-k t)``."""

    c: float
    k: float

    def __call__(self, t):
        return self.c * _exp(-self.k * t)

    def tail(self) -> Monomial:
        return Monomial(float(self.c), 0.0, -float(self.k))


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear interpolation through ``(t, value)`` points.

    Outside the table the nearest end value is held.
    """

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(t), float(v)) for t, v in self.points)
        if not pts:
            raise ValueError("Tabulated needs at least one point")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_ts", tuple(t for t, _ in pts))
        object.__setattr__(self, "_vs", tuple(v for _, v in pts))

    def __call__(self, t):
        ts, vs = self._ts, self._vs
        if isinstance(t, np.ndarray):
            return np.interp(t, ts, vs)
        if t <= ts[0]:
            return vs[0]
        if t >= ts[-1]:
            return vs[-1]
        i = bisect.bisect_right(ts, t)
        t0, t1 = ts[i - 1], ts[i]
        w = (t - t0) / (t1 - t0)
        return vs[i - 1] + w * (vs[i] - vs[i - 1])

    def tail(self) -> Monomial:
        return Monomial(self._vs[-1])


TimeFunction = Union[Constant, RationalDecay, ExponentialDecay, Tabulated]


def eval_time_fn(f: TimeFunction, t):
    _check_t(t)
    return f(t)


def time_fn_integral(f: TimeFunction) -> float:
    """Integral of ``f`` over ``[0, inf)``; ``inf`` when it diverges."""
    if isinstance(f, Constant):
        return 0.0 if f.c == 0 else math.inf
    if isinstance(f, RationalDecay):
        if f.c == 0:
            return 0.0
        return f.c / (f.e - 1.0) if f.e > 1 else math.inf
    if isinstance(f, ExponentialDecay):
        if f.c == 0:
            return 0.0
        return f.c / f.k if f.k > 0 else math.inf
    if isinstance(f, Tabulated):
        ts, vs = f._ts, f._vs
        if vs[-1] != 0:
            return math.inf
        total = vs[0] * max(ts[0], 0.0)
        for (t0, v0), (t1, v1) in zip(f.points, f.points[1:]):
            total += 0.5 * (v0 + v1) * (t1 - t0)
        return total
    raise TypeError(f"not a time function: {f!r}")


# ---------------------------------------------------------------------------
# Nonlinearities alpha(t, g) = coefficient(t) * g**p
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Zero:
    p: float = field(default=1.0, init=False)

    def coefficient(self, t):
        return 0.0 * t if isinstance(t, np.ndarray) else 0.0

    def coefficient_tail(self) -> Monomial:
        return Monomial(0.0)

    def __call__(self, t, g):
        return 0.0 * g


@dataclass(frozen=True)
class PowerLaw:
    """``c0 * g**p``."""

    c0: float
    p: float

    def coefficient(self, t):
        if isinstance(t, np.ndarray):
            return np.full(t.shape, float(self.c0))
        return float(self.c0)

    def coefficient_tail(self) -> Monomial:
        return Monomial(float(self.c0))

    def __call__(self, t, g):
        return self.c0 * g**self.p


@dataclass(frozen=True)
class Separable:
    """``f(t) * g**p``."""

    f: TimeFunction
    p: float

    def coefficient(self, t):
        return self.f(t)

    def coefficient_tail(self) -> Monomial:
        return self.f.tail()

    def __call__(self, t, g):
        return self.f(t) * g**self.p


NonlinearTerm = Union[Zero, PowerLaw, Separable]


def eval_nonlinearity(a: NonlinearTerm, t, g):
    _check_t(t)
    if np.any(np.asarray(g) < 0):
        raise DomainError(f"g must be nonnegative, got {g!r}")
    return a(t, g)


# ---------------------------------------------------------------------------
# Majorant candidates mu(t) > 0
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerLawMajorant:
    """``lam * (1+t)**q``."""

    lam: float
    q: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive and finite, got {self.lam}")
        if not (self.q >= 0 and math.isfinite(self.q)):
            raise ValueError(f"q must be nonnegative and finite, got {self.q}")

    def __call__(self, t):
        return self.lam * (1.0 + t) ** self.q

    def derivative(self, t):
        return self.lam * self.q * (1.0 + t) ** (self.q - 1.0)

    def inverse_tail(self) -> Monomial:
        return Monomial(1.0 / self.lam, -float(self.q))

    def growth_tail(self) -> Monomial:
        # mu_dot / mu**2
        return Monomial(self.q / self.lam, -float(self.q) - 1.0)

    def describe(self) -> str:
        return f"1/({self.lam!r}*(1+t)^{self.q!r})"


@dataclass(frozen=True)
class ExponentialMajorant:
    """``mu0 * exp(c t)``."""

    mu0: float
    c: float

    def __post_init__(self):
        if not (self.mu0 > 0 and math.isfinite(self.mu0)):
            raise ValueError(f"mu0 must be positive and finite, got {self.mu0}")
        if not math.isfinite(self.c):
            raise ValueError(f"c must be finite, got {self.c}")

    def __call__(self, t):
        return self.mu0 * _exp(self.c * t)

    def derivative(self, t):
        return self.c * self(t)

    def inverse_tail(self) -> Monomial:
        return Monomial(1.0 / self.mu0, 0.0, -float(self.c))

    def growth_tail(self) -> Monomial:
        return Monomial(self.c / self.mu0, 0.0, -float(self.c))

    def describe(self) -> str:
        return f"1/({self.mu0!r}*exp({self.c!r}*t))"


@dataclass(frozen=True)
class ConstantMajorant:
    mu0: float

    def __post_init__(self):
        if not (self.mu0 > 0 and math.isfinite(self.mu0)):
            raise ValueError(f"mu0 must be positive and finite, got {self.mu0}")

    def __call__(self, t):
        if isinstance(t, np.ndarray):
            return np.full(t.shape, float(self.mu0))
        return float(self.mu0)

    def derivative(self, t):
        return 0.0 * t if isinstance(t, np.ndarray) else 0.0

    def inverse_tail(self) -> Monomial:
        return Monomial(1.0 / self.mu0)

    def growth_tail(self) -> Monomial:
        return Monomial(0.0)

    def describe(self) -> str:
        return f"1/{self.mu0!r}"


MajorantCandidate = Union[PowerLawMajorant, ExponentialMajorant, ConstantMajorant]


def mu_eval(m: MajorantCandidate, t):
    """Return ``(mu(t), mu_dot(t))``."""
    _check_t(t)
    return m(t), m.derivative(t)


# ---------------------------------------------------------------------------
# Problem instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContinuousProblem:
    """``g' <= -gamma(t) g + alpha(t, g) + beta(t)``, ``g(0) = g0``."""

    gamma: TimeFunction
    alpha: NonlinearTerm
    beta: TimeFunction
    g0: float

    def rhs(self, t, g):
        """Right-hand side of the equality case."""
        return -self.gamma(t) * g + self.alpha(t, g) + self.beta(t)


@dataclass(frozen=True)
class PowerLawInstance:
    """gamma = r/(1+t)**nu, alpha = c0 g**p, beta = c1/(1+t)**omega."""

    c0: float
    p: float
    c1: float
    omega: float
    r: float
    nu: float
    g0: float

    def __post_init__(self):
        for name in ("c0", "p", "c1", "omega", "r", "nu", "g0"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if not self.p > 1:
            raise ValueError(f"p must satisfy p > 1, got {self.p}")
        for name in ("c0", "c1", "g0"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")
        for name in ("omega", "r", "nu"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    def problem(self) -> ContinuousProblem:
        return ContinuousProblem(
            gamma=RationalDecay(self.r, self.nu),
            alpha=PowerLaw(self.c0, self.p),
            beta=RationalDecay(self.c1, self.omega),
            g0=self.g0,
        )

    def replace(self, **changes) -> PowerLawInstance:
        return replace(self, **changes)


def _as_sequence(x, n, name):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got shape {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteProblem:
    """``g[n+1] <= (1 - h[n] gamma[n]) g[n] + h[n] alpha(n, g[n]) + h[n] beta[n]``.

    Scalars passed for ``h``, ``gamma`` or ``beta`` are broadcast to length ``N``.
    """

    N: int
    h: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    alpha: NonlinearTerm
    g0: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        for name in ("h", "gamma", "beta"):
            object.__setattr__(self, name, _as_sequence(getattr(self, name), self.N, name))
        if np.any(self.h <= 0):
            raise ValueError("step sizes h[n] must be positive")
        hg = self.h * self.gamma
        if np.any(hg <= 0) or np.any(hg >= 1):
            n = int(np.argmax((hg <= 0) | (hg >= 1)))
            raise ValueError(f"need 0 < h[n]*gamma[n] < 1, violated at n={n} ({hg[n]!r})")
        if np.any(self.beta < 0):
            raise ValueError("beta[n] must be nonnegative")
        if not self.g0 >= 0:
            raise ValueError(f"g0 must be nonnegative, got {self.g0}")


# ---------------------------------------------------------------------------
# Structural validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> tuple[Check, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def time_fn_checks(f: TimeFunction, label: str) -> list[Check]:
    if isinstance(f, Tabulated):
        ts, vs = f._ts, f._vs
        increasing = all(b > a for a, b in zip(ts, ts[1:]))
        finite = all(math.isfinite(x) for x in ts + vs)
        return [
            Check(f"{label}_finite", finite),
            Check(f"{label}_nonnegative", finite and min(vs) >= 0, f"min value {min(vs)!r}"),
            Check(f"{label}_table_increasing", increasing),
        ]
    params = {k: float(v) for k, v in vars(f).items()}
    finite = all(math.isfinite(v) for v in params.values())
    decay_ok = all(params.get(k, 0.0) >= 0 for k in ("e", "k"))
    return [
        Check(f"{label}_finite", finite, repr(params)),
        Check(f"{label}_nonnegative", finite and params["c"] >= 0 and decay_ok, repr(params)),
    ]


def validate_problem(p: ContinuousProblem) -> ValidationReport:
    """Decide the standing assumptions on γ, α, β from the variant parameters."""
    checks = time_fn_checks(p.gamma, "gamma") + time_fn_checks(p.beta, "beta")

    a = p.alpha
    if isinstance(a, Zero):
        coef_ok, coef_detail = True, "zero"
    elif isinstance(a, PowerLaw):
        coef_ok, coef_detail = math.isfinite(a.c0) and a.c0 >= 0, f"c0={a.c0!r}"
    else:
        coef_checks = time_fn_checks(a.f, "alpha_coefficient")
        checks += [c for c in coef_checks if c.name != "alpha_coefficient_nonnegative"]
        coef_ok = all(c.passed for c in coef_checks)
        coef_detail = f"f={a.f!r}"
    checks.append(Check("alpha_nonnegative", coef_ok, coef_detail))
    checks.append(Check("alpha_nondecreasing", coef_ok and a.p > 0, f"p={a.p!r}"))
    checks.append(Check("alpha_lipschitz", math.isfinite(a.p) and a.p >= 1, f"p={a.p!r}"))
    checks.append(Check("g0_nonnegative", math.isfinite(p.g0) and p.g0 >= 0, f"g0={p.g0!r}"))
    return ValidationReport(tuple(checks))
