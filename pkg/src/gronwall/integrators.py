"""Fixed-step classical Runge-Kutta (RK4) integration.

States may be Python floats (fast scalar path) or 1-D numpy arrays.  A
step that takes the state norm above ``limit`` (or makes it non-finite)
stops the integration; the crossing time inside that step is located by
bisection on the step length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = ["RK4Run", "rk4_step", "rk4_fixed", "step_count", "rk4_batch_scalar"]


@dataclass
class RK4Run:
    times: np.ndarray
    states: np.ndarray
    h: float
    escape_time: Optional[float] = None
    escape_state: object = None

    @property
    def escaped(self) -> bool:
        return self.escape_time is not None


def step_count(t_max: float, h: float) -> int:
    """Number of equal steps covering ``[0, t_max]`` with length closest to ``h``."""
    if not (h > 0 and math.isfinite(h)):
        raise ValueError(f"step h must be positive and finite, got {h}")
    if not (t_max > 0 and math.isfinite(t_max)):
        raise ValueError(f"t_max must be positive and finite, got {t_max}")
    return max(1, int(round(t_max / h)))


def rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + (0.5 * h) * k1)
    k3 = f(t + 0.5 * h, y + (0.5 * h) * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _scalar_norm(y):
    return abs(y)


def _vector_norm(y):
    return math.sqrt(float(np.dot(y, y)))


def _try_step(f, t, y, h, norm, clamp):
    with np.errstate(all="ignore"):
        try:
            y_new = rk4_step(f, t, y, h)
        except (OverflowError, ZeroDivisionError):
            return None, math.inf
        if clamp:
            y_new = max(y_new, 0.0)
        return y_new, norm(y_new)


def _bisect_escape(f, t, y, h, limit, norm, clamp):
    lo, hi = 0.0, h
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        _, size = _try_step(f, t, y, mid, norm, clamp)
        if size <= limit:
            lo = mid
        else:
            hi = mid
    return t + hi


def rk4_fixed(
    f: Callable,
    y0,
    h: float,
    n: int,
    *,
    limit: float = math.inf,
    clamp: bool = False,
    keep_every: int = 1,
) -> RK4Run:
    """Take ``n`` RK4 steps of size ``h`` from ``(0, y0)``.

    ``clamp`` projects a scalar state onto ``[0, inf)`` after every step.
    Only every ``keep_every``-th state is stored.
    """
    scalar = isinstance(y0, (float, int))
    norm = _scalar_norm if scalar else _vector_norm
    y = float(y0) if scalar else np.array(y0, dtype=float)
    kept_t, kept_y = [0.0], [y]
    for i in range(n):
        t = i * h
        y_new, size = _try_step(f, t, y, h, norm, clamp)
        if not size <= limit:
            t_esc = _bisect_escape(f, t, y, h, limit, norm, clamp)
            return RK4Run(np.array(kept_t), np.array(kept_y), h, t_esc, y)
        y = y_new
        if (i + 1) % keep_every == 0:
            kept_t.append((i + 1) * h)
            kept_y.append(y)
    return RK4Run(np.array(kept_t), np.array(kept_y), h)


def rk4_batch_scalar(coefs: Callable, p: np.ndarray, y0: np.ndarray, h: float, n: int,
                     *, limit: float = math.inf, keep_every: int = 1):
    """RK4 for many independent scalar equations ``w' = -G w + A max(w,0)**p + B``.

    ``coefs(t)`` returns the arrays ``(G, A, B)`` at time ``t``.  Lanes that
    cross ``limit`` are frozen at NaN and reported in the returned mask.
    """
    w = np.array(y0, dtype=float)
    out = np.empty((n // keep_every + 1, w.size))
    out[0] = w
    escaped = np.zeros(w.size, dtype=bool)
    square = bool(np.all(p == 2.0))
    half = 0.5 * h

    def rate(c, x):
        g, a, b = c
        x_pos = np.maximum(x, 0.0)
        nl = x_pos * x_pos if square else np.power(x_pos, p)
        return -g * x + a * nl + b

    c0 = coefs(0.0)
    with np.errstate(all="ignore"):
        for i in range(n):
            t = i * h
            c_mid = coefs(t + half)
            c1 = coefs(t + h)
            k1 = rate(c0, w)
            k2 = rate(c_mid, w + half * k1)
            k3 = rate(c_mid, w + half * k2)
            k4 = rate(c1, w + h * k3)
            w = w + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            np.maximum(w, 0.0, out=w)
            bad = ~(w <= limit)
            if bad.any():
                escaped |= bad
                w[bad] = np.nan
            c0 = c1
            if (i + 1) % keep_every == 0:
                out[(i + 1) // keep_every] = w
    return out, escaped
