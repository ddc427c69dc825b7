"""Run configuration documents (YAML) and their validation.

Variant types are written as single-key mappings, e.g.
``gamma: {rational: {c: 3, e: 1}}`` or ``majorant: {powerlaw: {lambda: 1, q: 1}}``.
Unknown keys are rejected and every error names the offending field path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Union

import numpy as np
import yaml

from .certifier import GridSpec
from .oracle import LinearEvolutionSpec, NonlinearEvolutionSpec
from .problem import (
    Constant,
    ConstantMajorant,
    ContinuousProblem,
    DiscreteProblem,
    ExponentialDecay,
    ExponentialMajorant,
    PowerLaw,
    PowerLawInstance,
    PowerLawMajorant,
    RationalDecay,
    Separable,
    Tabulated,
    Zero,
    validate_problem,
)
from .search import OBJECTIVES, SWEEP_PARAMETERS

__all__ = [
    "ConfigError",
    "SimulationSpec",
    "OutputSpec",
    "SearchSpec",
    "SweepSpec",
    "RunConfig",
    "parse_config",
    "load_config",
    "emit_config",
    "config_to_dict",
]

PROBLEM_KINDS = ("powerlaw", "continuous", "discrete", "linear_evolution", "nonlinear_evolution")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str, line: Optional[int] = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{path}: {message}" if path else f"{where}{message}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class SimulationSpec:
    t_max: float = 50.0
    h: float = 1e-3
    seed: int = 0


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv", "json")


@dataclass(frozen=True)
class SearchSpec:
    objective: str = "max_q"
    lambda_min: Optional[float] = None
    lambda_max: Optional[float] = None
    lambda_points: int = 41
    q_min: float = 0.0
    q_max: Optional[float] = None
    q_points: int = 41


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]


Problem = Union[ContinuousProblem, PowerLawInstance, DiscreteProblem, LinearEvolutionSpec, NonlinearEvolutionSpec]


@dataclass(frozen=True, eq=False)
class RunConfig:
    kind: str
    problem: Problem
    majorant: Any = None
    grid: GridSpec = field(default_factory=GridSpec)
    simulation: SimulationSpec = field(default_factory=SimulationSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    search: SearchSpec = field(default_factory=SearchSpec)
    sweep: Optional[SweepSpec] = None

    def mu_sequence(self) -> Optional[np.ndarray]:
        """``mu[0..N]`` for discrete problems (explicit or geometric)."""
        m = self.majorant
        if m is None or self.kind != "discrete":
            return None
        if isinstance(m, tuple) and m[0] == "geometric":
            _, mu0, rho = m
            return mu0 * rho ** np.arange(self.problem.N + 1, dtype=float)
        return np.asarray(m, dtype=float)


# ---------------------------------------------------------------------------
# field helpers
# ---------------------------------------------------------------------------


def _mapping(d, path, allowed, required=()):
    if not isinstance(d, dict):
        raise ConfigError(path, f"expected a mapping, got {type(d).__name__}")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    for k in required:
        if k not in d:
            raise ConfigError(f"{path}.{k}" if path else k, "missing required key")
    return d


def _num(v, path) -> float:
    # PyYAML reads 1e-3 (no dot) as a string
    if isinstance(v, bool):
        raise ConfigError(path, "expected a number, got a boolean")
    if isinstance(v, str):
        try:
            v = float(v)
        except ValueError:
            raise ConfigError(path, f"expected a number, got {v!r}") from None
    if not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(v).__name__}")
    x = float(v)
    if not math.isfinite(x):
        raise ConfigError(path, "must be finite")
    return x


def _int(v, path) -> int:
    x = _num(v, path)
    if x != int(x):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    return int(x)


def _num_seq(v, path, length=None):
    if isinstance(v, (list, tuple)):
        out = [_num(x, f"{path}[{i}]") for i, x in enumerate(v)]
        if length is not None and len(out) != length:
            raise ConfigError(path, f"expected {length} entries, got {len(out)}")
        return out
    return _num(v, path)


def _matrix(v, path):
    if not isinstance(v, (list, tuple)) or not all(isinstance(r, (list, tuple)) for r in v):
        raise ConfigError(path, "expected a list of rows")
    return [[_num(x, f"{path}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(v)]


def _variant(d, path, kinds):
    if not isinstance(d, dict) or len(d) != 1:
        raise ConfigError(path, f"expected a single-key mapping naming one of {sorted(kinds)}")
    (tag, body), = d.items()
    if tag not in kinds:
        raise ConfigError(f"{path}.{tag}", f"unknown kind; expected one of {sorted(kinds)}")
    return tag, ({} if body is None else body)


def _construct(fn, path, fields, **kwargs):
    try:
        return fn(**kwargs)
    except ValueError as exc:
        words = str(exc).split()
        sub = words[0] if words and words[0] in fields else ""
        raise ConfigError(f"{path}.{sub}" if sub else path, str(exc)) from None


# ---------------------------------------------------------------------------
# domain types <-> plain data
# ---------------------------------------------------------------------------


def _time_fn(d, path):
    if isinstance(d, (int, float, str)) and not isinstance(d, bool):
        return Constant(_num(d, path))
    tag, body = _variant(d, path, {"constant", "rational", "exponential", "tabulated"})
    p = f"{path}.{tag}"
    if tag == "constant":
        _mapping(body, p, ("c",), ("c",))
        return Constant(_num(body["c"], f"{p}.c"))
    if tag == "rational":
        _mapping(body, p, ("c", "e"), ("c", "e"))
        return RationalDecay(_num(body["c"], f"{p}.c"), _num(body["e"], f"{p}.e"))
    if tag == "exponential":
        _mapping(body, p, ("c", "k"), ("c", "k"))
        return ExponentialDecay(_num(body["c"], f"{p}.c"), _num(body["k"], f"{p}.k"))
    _mapping(body, p, ("points",), ("points",))
    pts = body["points"]
    if not isinstance(pts, list) or not pts:
        raise ConfigError(f"{p}.points", "expected a nonempty list of [t, value] pairs")
    pairs = []
    for i, pt in enumerate(pts):
        if not isinstance(pt, (list, tuple)) or len(pt) != 2:
            raise ConfigError(f"{p}.points[{i}]", "expected a [t, value] pair")
        pairs.append((_num(pt[0], f"{p}.points[{i}][0]"), _num(pt[1], f"{p}.points[{i}][1]")))
    return Tabulated(tuple(pairs))


def _time_fn_data(f):
    if isinstance(f, Constant):
        return {"constant": {"c": f.c}}
    if isinstance(f, RationalDecay):
        return {"rational": {"c": f.c, "e": f.e}}
    if isinstance(f, ExponentialDecay):
        return {"exponential": {"c": f.c, "k": f.k}}
    return {"tabulated": {"points": [list(pt) for pt in f.points]}}


def _nonlinearity(d, path):
    tag, body = _variant(d, path, {"zero", "powerlaw", "separable"})
    p = f"{path}.{tag}"
    if tag == "zero":
        _mapping(body, p, ())
        return Zero()
    if tag == "powerlaw":
        _mapping(body, p, ("c0", "p"), ("c0", "p"))
        return PowerLaw(_num(body["c0"], f"{p}.c0"), _num(body["p"], f"{p}.p"))
    _mapping(body, p, ("f", "p"), ("f", "p"))
    return Separable(_time_fn(body["f"], f"{p}.f"), _num(body["p"], f"{p}.p"))


def _nonlinearity_data(a):
    if isinstance(a, Zero):
        return {"zero": {}}
    if isinstance(a, PowerLaw):
        return {"powerlaw": {"c0": a.c0, "p": a.p}}
    return {"separable": {"f": _time_fn_data(a.f), "p": a.p}}


_POWERLAW_FIELDS = ("c0", "p", "c1", "omega", "nu", "r", "g0")


def _problem(d, path):
    _mapping(d, path, PROBLEM_KINDS)
    present = [k for k in PROBLEM_KINDS if k in d]
    if len(present) != 1:
        found = ", ".join(present) or "none"
        raise ConfigError(path, f"exactly one problem kind is required, found: {found}")
    kind = present[0]
    body = d[kind]
    p = f"{path}.{kind}"

    if kind == "powerlaw":
        _mapping(body, p, _POWERLAW_FIELDS, _POWERLAW_FIELDS)
        vals = {k: _num(body[k], f"{p}.{k}") for k in _POWERLAW_FIELDS}
        return kind, _construct(PowerLawInstance, p, _POWERLAW_FIELDS, **vals)

    if kind == "continuous":
        keys = ("gamma", "alpha", "beta", "g0")
        _mapping(body, p, keys, keys)
        prob = ContinuousProblem(
            gamma=_time_fn(body["gamma"], f"{p}.gamma"),
            alpha=_nonlinearity(body["alpha"], f"{p}.alpha"),
            beta=_time_fn(body["beta"], f"{p}.beta"),
            g0=_num(body["g0"], f"{p}.g0"),
        )
        report = validate_problem(prob)
        if not report.ok:
            bad = report.failures[0]
            sub = bad.name.split("_")[0]
            raise ConfigError(f"{p}.{sub}", f"fails {bad.name} ({bad.detail})")
        return kind, prob

    if kind == "discrete":
        keys = ("N", "h", "gamma", "beta", "alpha", "g0")
        _mapping(body, p, keys, keys)
        n = _int(body["N"], f"{p}.N")
        vals = {k: _num_seq(body[k], f"{p}.{k}", n) for k in ("h", "gamma", "beta")}
        alpha = _nonlinearity(body["alpha"], f"{p}.alpha")
        report = validate_problem(ContinuousProblem(Constant(0.0), alpha, Constant(0.0), 0.0))
        if not report.ok:
            raise ConfigError(f"{p}.alpha", f"fails {report.failures[0].name}")
        return kind, _construct(
            DiscreteProblem, p, keys, N=n, alpha=alpha, g0=_num(body["g0"], f"{p}.g0"), **vals
        )

    if kind == "linear_evolution":
        keys = ("S", "D", "phi", "B0", "psi", "u0")
        _mapping(body, p, keys, keys)
        return kind, _construct(
            LinearEvolutionSpec, p, keys,
            S=_matrix(body["S"], f"{p}.S"),
            D=_num_seq(body["D"], f"{p}.D"),
            phi=_time_fn(body["phi"], f"{p}.phi"),
            B0=_matrix(body["B0"], f"{p}.B0"),
            psi=_time_fn(body["psi"], f"{p}.psi"),
            u0=_num_seq(body["u0"], f"{p}.u0"),
        )

    keys = ("r", "nu", "c0", "p", "c1", "omega", "u0", "S")
    _mapping(body, p, keys, keys[:-1])
    vals = {k: _num(body[k], f"{p}.{k}") for k in keys[:6]}
    S = _matrix(body["S"], f"{p}.S") if "S" in body else None
    return kind, _construct(NonlinearEvolutionSpec, p, keys, u0=_num_seq(body["u0"], f"{p}.u0"), S=S, **vals)


def _problem_data(kind, pr):
    if kind == "powerlaw":
        body = {k: getattr(pr, k) for k in _POWERLAW_FIELDS}
    elif kind == "continuous":
        body = {
            "gamma": _time_fn_data(pr.gamma),
            "alpha": _nonlinearity_data(pr.alpha),
            "beta": _time_fn_data(pr.beta),
            "g0": pr.g0,
        }
    elif kind == "discrete":
        body = {
            "N": pr.N,
            "h": pr.h.tolist(),
            "gamma": pr.gamma.tolist(),
            "beta": pr.beta.tolist(),
            "alpha": _nonlinearity_data(pr.alpha),
            "g0": pr.g0,
        }
    elif kind == "linear_evolution":
        body = {
            "S": pr.S.tolist(),
            "D": pr.D.tolist(),
            "phi": _time_fn_data(pr.phi),
            "B0": pr.B0.tolist(),
            "psi": _time_fn_data(pr.psi),
            "u0": pr.u0.tolist(),
        }
    else:
        body = {k: getattr(pr, k) for k in ("r", "nu", "c0", "p", "c1", "omega")}
        body["u0"] = pr.u0.tolist()
        if pr.S.any():
            body["S"] = pr.S.tolist()
    return {kind: body}


def _majorant(d, path, kind):
    if kind == "discrete":
        tag, body = _variant(d, path, {"sequence", "geometric"})
        p = f"{path}.{tag}"
        if tag == "sequence":
            if not isinstance(body, list):
                raise ConfigError(p, "expected a list of mu values")
            return tuple(_num(x, f"{p}[{i}]") for i, x in enumerate(body))
        _mapping(body, p, ("mu0", "rho"), ("mu0", "rho"))
        mu0, rho = _num(body["mu0"], f"{p}.mu0"), _num(body["rho"], f"{p}.rho")
        if not (mu0 > 0 and rho > 0):
            raise ConfigError(p, "mu0 and rho must be positive")
        return ("geometric", mu0, rho)

    tag, body = _variant(d, path, {"powerlaw", "exponential", "constant"})
    p = f"{path}.{tag}"
    if tag == "powerlaw":
        _mapping(body, p, ("lambda", "q"), ("lambda", "q"))
        lam, q = _num(body["lambda"], f"{p}.lambda"), _num(body["q"], f"{p}.q")
        return _construct(PowerLawMajorant, p, (), lam=lam, q=q)
    if tag == "exponential":
        _mapping(body, p, ("mu0", "c"), ("mu0", "c"))
        return _construct(ExponentialMajorant, p, (), mu0=_num(body["mu0"], f"{p}.mu0"), c=_num(body["c"], f"{p}.c"))
    _mapping(body, p, ("mu0",), ("mu0",))
    return _construct(ConstantMajorant, p, (), mu0=_num(body["mu0"], f"{p}.mu0"))


def _majorant_data(m):
    if m is None:
        return None
    if isinstance(m, PowerLawMajorant):
        return {"powerlaw": {"lambda": m.lam, "q": m.q}}
    if isinstance(m, ExponentialMajorant):
        return {"exponential": {"mu0": m.mu0, "c": m.c}}
    if isinstance(m, ConstantMajorant):
        return {"constant": {"mu0": m.mu0}}
    if isinstance(m, tuple) and m and m[0] == "geometric":
        return {"geometric": {"mu0": m[1], "rho": m[2]}}
    return {"sequence": list(m)}


def _simple(cls, d, path, conv):
    _mapping(d, path, tuple(conv))
    kwargs = {k: conv[k](v, f"{path}.{k}") for k, v in d.items()}
    return _construct(cls, path, tuple(conv), **kwargs)


def _str_choice(choices):
    def conv(v, path):
        if v not in choices:
            raise ConfigError(path, f"expected one of {list(choices)}, got {v!r}")
        return v

    return conv


def _bool(v, path):
    if not isinstance(v, bool):
        raise ConfigError(path, f"expected true/false, got {v!r}")
    return v


def _opt_num(v, path):
    return None if v is None else _num(v, path)


def _formats(v, path):
    if not isinstance(v, list) or not set(v) <= {"csv", "json"}:
        raise ConfigError(path, "expected a subset of [csv, json]")
    return tuple(v)


def _str(v, path):
    if not isinstance(v, str):
        raise ConfigError(path, "expected a string")
    return v


def _values(v, path):
    if not isinstance(v, list):
        raise ConfigError(path, "expected a list of numbers")
    vals = tuple(_num(x, f"{path}[{i}]") for i, x in enumerate(v))
    if list(vals) != sorted(vals):
        raise ConfigError(path, "values must be sorted")
    return vals


def _from_data(data) -> RunConfig:
    _mapping(data, "", ("problem", "majorant", "grid", "simulation", "output", "search", "sweep"), ("problem",))
    kind, problem = _problem(data["problem"], "problem")
    majorant = _majorant(data["majorant"], "majorant", kind) if data.get("majorant") is not None else None
    grid = _simple(GridSpec, data.get("grid") or {}, "grid", {
        "t_max": _num, "points": _int, "spacing": _str_choice(("uniform", "geometric")), "tail_check": _bool,
    })
    sim = _simple(SimulationSpec, data.get("simulation") or {}, "simulation", {"t_max": _num, "h": _num, "seed": _int})
    if not (sim.t_max > 0 and sim.h > 0):
        raise ConfigError("simulation", "t_max and h must be positive")
    out = _simple(OutputSpec, data.get("output") or {}, "output", {"directory": _str, "formats": _formats})
    search = _simple(SearchSpec, data.get("search") or {}, "search", {
        "objective": _str_choice(OBJECTIVES), "lambda_min": _opt_num, "lambda_max": _opt_num,
        "lambda_points": _int, "q_min": _num, "q_max": _opt_num, "q_points": _int,
    })
    sweep = None
    if data.get("sweep") is not None:
        _mapping(data["sweep"], "sweep", ("parameter", "values"), ("parameter", "values"))
        sweep = SweepSpec(
            _str_choice(SWEEP_PARAMETERS)(data["sweep"]["parameter"], "sweep.parameter"),
            _values(data["sweep"]["values"], "sweep.values"),
        )
    return RunConfig(kind, problem, majorant, grid, sim, out, search, sweep)


def parse_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else None
        raise ConfigError("", f"YAML parse error: {exc.problem}", line) from None
    except yaml.YAMLError as exc:
        raise ConfigError("", f"YAML parse error: {exc}") from None
    if data is None:
        raise ConfigError("", "empty configuration document")
    return _from_data(data)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_to_dict(cfg: RunConfig) -> dict:
    out = {"problem": _problem_data(cfg.kind, cfg.problem)}
    if cfg.majorant is not None:
        out["majorant"] = _majorant_data(cfg.majorant)
    out["grid"] = {
        "t_max": cfg.grid.t_max, "points": cfg.grid.points,
        "spacing": cfg.grid.spacing, "tail_check": cfg.grid.tail_check,
    }
    out["simulation"] = {"t_max": cfg.simulation.t_max, "h": cfg.simulation.h, "seed": cfg.simulation.seed}
    out["output"] = {"directory": cfg.output.directory, "formats": list(cfg.output.formats)}
    s = cfg.search
    out["search"] = {
        "objective": s.objective, "lambda_min": s.lambda_min, "lambda_max": s.lambda_max,
        "lambda_points": s.lambda_points, "q_min": s.q_min, "q_max": s.q_max, "q_points": s.q_points,
    }
    if cfg.sweep is not None:
        out["sweep"] = {"parameter": cfg.sweep.parameter, "values": list(cfg.sweep.values)}
    return out


def emit_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)
