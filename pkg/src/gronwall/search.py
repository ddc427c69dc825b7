"""Feasible power-law majorants ``mu = lam (1+t)**q`` for power-law instances."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .certifier import amplitude_lhs, check_powerlaw_closed_form
from .problem import PowerLawInstance

__all__ = [
    "EPS_BOUNDARY",
    "SearchResult",
    "lambda_star",
    "q_interval",
    "choose_lambda",
    "search_powerlaw",
    "sweep_feasibility",
]

EPS_BOUNDARY = 1e-6
OBJECTIVES = ("max_q", "max_slack")
SWEEP_PARAMETERS = ("r", "c0", "c1", "g0")
_LAMBDA_FLOOR = 1e-150


@dataclass(frozen=True)
class SearchResult:
    feasible: bool
    best: Optional[tuple[float, float]]
    q_interval: Optional[tuple[float, float]]
    lambda_star: float
    slack: float
    objective: str = "max_q"

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "lambda": self.best[0] if self.best else None,
            "q": self.best[1] if self.best else None,
            "q_interval": list(self.q_interval) if self.q_interval else None,
            "lambda_star": self.lambda_star,
            "slack": self.slack,
            "objective": self.objective,
        }


def lambda_star(c0: float, p: float, c1: float) -> float:
    """Minimizer of ``f(lam) = c0 lam**(1-p) + c1 lam`` on ``(0, inf)``.

    Returns ``inf`` when ``c1 == 0`` (``f`` is then decreasing) and ``0.0``
    when ``c0 == 0`` (``f`` is increasing); neither is attained.
    """
    if c0 < 0 or c1 < 0 or not p > 1:
        raise ValueError(f"need c0 >= 0, c1 >= 0, p > 1; got c0={c0}, p={p}, c1={c1}")
    if c1 == 0:
        return math.inf
    if c0 == 0:
        return 0.0
    return (c0 * (p - 1.0) / c1) ** (1.0 / p)


def q_interval(p: float, nu: float, omega: float) -> Optional[tuple[float, float]]:
    """Decay exponents allowed by the exponent conditions, or ``None``."""
    if nu > 1:
        return None
    lo, hi = nu / (p - 1.0), omega - nu
    if lo > hi:
        return None
    return lo, hi


def _unattained_target(inst: PowerLawInstance, qi: tuple[float, float]) -> Optional[float]:
    """Amplitude budget to spend on ``f(lam)`` when ``lambda_star`` is 0 or inf."""
    q_lo, q_hi = qi
    if inst.r > q_hi:
        return inst.r - q_hi
    if inst.r > q_lo:
        return 0.5 * (inst.r - q_lo)
    return None


def choose_lambda(inst: PowerLawInstance, qi: Optional[tuple[float, float]] = None) -> float:
    """``min(lambda_star, (1 - EPS_BOUNDARY)/g0)``; ``f`` is convex so this is
    the minimizer of ``f`` on ``(0, cap]``.

    When the minimizer is not attained and no cap applies, a lambda whose
    ``f`` fits the amplitude budget is used instead, so that ``q_hi`` is
    reached whenever ``r > q_hi``.
    """
    cap = (1.0 - EPS_BOUNDARY) / inst.g0 if inst.g0 > 0 else math.inf
    lam = lambda_star(inst.c0, inst.p, inst.c1)
    if 0 < lam < math.inf:
        return min(lam, cap)
    if lam == math.inf and cap < math.inf:
        return cap
    target = _unattained_target(inst, qi) if qi is not None else None
    if inst.c1 == 0:
        # f decreases, so any lambda past the budget point works; prefer >= 1
        lam = max((inst.c0 / target) ** (1.0 / (inst.p - 1.0)), 1.0) if target and inst.c0 > 0 else 1.0
    else:
        lam = target / inst.c1 if target else 1.0
    # keep mu and its powers representable for extreme coefficient ratios
    lam = min(max(lam, _LAMBDA_FLOOR), 1.0 / _LAMBDA_FLOOR)
    return min(lam, cap)


def search_powerlaw(inst: PowerLawInstance, objective: str = "max_q") -> SearchResult:
    """Pick ``(lam, q)`` satisfying the closed-form conditions.

    ``max_q`` returns the fastest certified decay; ``max_slack`` keeps the
    slowest admissible decay ``q_lo`` and maximizes the amplitude slack.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    lstar = lambda_star(inst.c0, inst.p, inst.c1)
    qi = q_interval(inst.p, inst.nu, inst.omega)
    if qi is None:
        return SearchResult(False, None, None, lstar, math.nan, objective)

    q_lo, q_hi = qi
    lam = choose_lambda(inst, qi)
    room = inst.r - amplitude_lhs(inst, lam, 0.0)
    if objective == "max_q":
        q = min(q_hi, room)
    else:
        q = q_lo
    if q < q_lo:
        return SearchResult(False, None, qi, lstar, room - q_lo, objective)

    # rounding in room = r - f(lam) can push f(lam) + q a few ulps past r
    for _ in range(64):
        if check_powerlaw_closed_form(inst, lam, q).feasible:
            return SearchResult(True, (lam, q), qi, lstar, inst.r - amplitude_lhs(inst, lam, q), objective)
        if q <= q_lo:
            break
        q = max(q_lo, math.nextafter(q, -math.inf))
    return SearchResult(False, None, qi, lstar, inst.r - amplitude_lhs(inst, lam, q), objective)


def sweep_feasibility(
    template: PowerLawInstance,
    parameter: str,
    values: Sequence[float],
    objective: str = "max_q",
) -> list[tuple[float, SearchResult]]:
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"parameter must be one of {SWEEP_PARAMETERS}, got {parameter!r}")
    return [(v, search_powerlaw(template.replace(**{parameter: v}), objective)) for v in values]
