"""Batch command-line front end.

Exit codes: 0 certified / satisfied, 1 error, 2 refuted / infeasible,
3 undecided, 4 finite-time escape (or discrete divergence).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .certifier import Verdict, certify_closed_form, certify_discrete, certify_grid, check_powerlaw_closed_form
from .config import ConfigError, RunConfig, load_config
from .oracle import (
    ConvergenceError,
    DivergenceError,
    FiniteEscape,
    IntegrationError,
    integrate_scalar_comparison,
    integrate_scalar_comparison_many,
    run_discrete_recursion,
    simulate_linear_evolution,
    simulate_nonlinear_evolution,
    verify_bound,
)
from .problem import ConstantMajorant, PowerLawInstance, PowerLawMajorant
from .search import choose_lambda, search_powerlaw, sweep_feasibility

__all__ = [
    "EXIT_OK", "EXIT_ERROR", "EXIT_REFUTED", "EXIT_UNDECIDED", "EXIT_ESCAPE", "MAX_ROWS",
    "cmd_certify", "cmd_search", "cmd_simulate", "cmd_discrete", "cmd_sweep", "main",
]

log = logging.getLogger("gronwall")

EXIT_OK, EXIT_ERROR, EXIT_REFUTED, EXIT_UNDECIDED, EXIT_ESCAPE = 0, 1, 2, 3, 4
MAX_ROWS = 10_000

_VERDICT_EXIT = {
    Verdict.CERTIFIED_STRICT: EXIT_OK,
    Verdict.CERTIFIED_NON_STRICT: EXIT_OK,
    Verdict.REFUTED: EXIT_REFUTED,
    Verdict.UNDECIDED: EXIT_UNDECIDED,
}


class UsageError(RuntimeError):
    """The configuration lacks a section the command needs."""


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


class _Writer:
    def __init__(self, cfg: RunConfig, out_dir: Path):
        self.formats = set(cfg.output.formats)
        self.dir = out_dir

    def json(self, name, data):
        if "json" not in self.formats:
            return
        self.dir.mkdir(parents=True, exist_ok=True)
        with open(self.dir / name, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def csv(self, name, header, rows):
        if "csv" not in self.formats:
            return
        self.dir.mkdir(parents=True, exist_ok=True)
        with open(self.dir / name, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])


def decimate(n: int, keep: int, limit: int = MAX_ROWS) -> np.ndarray:
    """At most ``limit`` evenly spread indices of ``range(n)``, always
    including the first, the last and ``keep``."""
    if n <= limit:
        return np.arange(n)
    return np.unique(np.concatenate([np.linspace(0, n - 1, limit - 1).round().astype(int), [keep]]))


def _require_majorant(cfg: RunConfig):
    if cfg.majorant is None:
        raise UsageError("this command needs a 'majorant' section")
    return cfg.majorant


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_certify(cfg: RunConfig, out_dir: Path) -> int:
    if cfg.kind not in ("powerlaw", "continuous"):
        raise UsageError(f"certify handles powerlaw or continuous problems, not {cfg.kind}")
    m = _require_majorant(cfg)
    closed = None
    if cfg.kind == "powerlaw":
        problem = cfg.problem.problem()
        if isinstance(m, PowerLawMajorant):
            closed = certify_closed_form(cfg.problem, m.lam, m.q)
    else:
        problem = cfg.problem
    if closed is not None and closed.certified:
        cert = closed
    else:
        cert = certify_grid(problem, m, cfg.grid)
    data = cert.to_dict()
    if closed is not None and cert is not closed:
        data["closed_form"] = closed.to_dict()
    data["seed"] = cfg.simulation.seed
    _Writer(cfg, out_dir).json("certificate.json", data)
    log.info("certify: %s (worst gap %.3g at %.3g)", cert.verdict.value, cert.worst_gap, cert.witness)
    return _VERDICT_EXIT[cert.verdict]


def _region_axes(cfg: RunConfig, inst: PowerLawInstance, qi):
    s = cfg.search
    centre = choose_lambda(inst, qi)
    lam_lo = s.lambda_min if s.lambda_min is not None else centre / 10.0
    lam_hi = s.lambda_max if s.lambda_max is not None else centre * 10.0
    if not 0 < lam_lo <= lam_hi:
        raise UsageError("search needs 0 < lambda_min <= lambda_max")
    q_top = s.q_max if s.q_max is not None else 1.5 * (qi[1] if qi else inst.omega)
    lams = np.geomspace(lam_lo, lam_hi, s.lambda_points)
    qs = np.linspace(s.q_min, max(q_top, s.q_min), s.q_points)
    return lams, qs


def cmd_search(cfg: RunConfig, out_dir: Path) -> int:
    if cfg.kind != "powerlaw":
        raise UsageError("search needs a powerlaw problem")
    inst = cfg.problem
    res = search_powerlaw(inst, cfg.search.objective)
    lams, qs = _region_axes(cfg, inst, res.q_interval)
    rows = []
    for lam in lams:
        for q in qs:
            fv = check_powerlaw_closed_form(inst, float(lam), float(q))
            rows.append((lam, q, fv.feasible, fv.slack))
    w = _Writer(cfg, out_dir)
    data = res.to_dict()
    data["seed"] = cfg.simulation.seed
    w.json("search.json", data)
    w.csv("region.csv", ["lambda", "q", "feasible", "slack"], rows)
    log.info("search: feasible=%s best=%s", res.feasible, res.best)
    return EXIT_OK if res.feasible else EXIT_REFUTED


def _envelope(cfg: RunConfig):
    """Majorant for simulate: explicit, or derived from the problem."""
    if cfg.majorant is not None:
        return cfg.majorant
    if cfg.kind in ("powerlaw", "nonlinear_evolution"):
        inst = cfg.problem if cfg.kind == "powerlaw" else cfg.problem.instance()
        res = search_powerlaw(inst, cfg.search.objective)
        if not res.feasible:
            raise UsageError("no majorant given and the power-law search is infeasible")
        return PowerLawMajorant(*res.best)
    if cfg.kind == "linear_evolution":
        s = cfg.problem
        bound = math.exp(s.bound_exponent()) * float(np.linalg.norm(s.u0))
        return ConstantMajorant(1.0 / bound) if bound > 0 else ConstantMajorant(1.0)
    raise UsageError("simulate needs a 'majorant' section for this problem")


def _trajectory_rows(traj, m):
    with np.errstate(over="ignore", divide="ignore"):
        mu = m(traj.times)
        ratio = traj.values * mu
        envelope = 1.0 / mu
    safe = np.where(np.isnan(ratio), np.inf, ratio)
    idx = decimate(len(traj.times), int(np.argmax(safe)))
    return [(traj.times[i], traj.values[i], envelope[i], ratio[i]) for i in idx]


def cmd_simulate(cfg: RunConfig, out_dir: Path) -> int:
    if cfg.kind == "discrete":
        raise UsageError("use the discrete command for discrete problems")
    sim = cfg.simulation
    m = _envelope(cfg)
    w = _Writer(cfg, out_dir)
    header = ["t", "g", "envelope", "ratio"]
    extra = {"seed": sim.seed, "t_max": sim.t_max, "h": sim.h, "majorant": m.describe()}
    try:
        if cfg.kind == "powerlaw":
            traj = integrate_scalar_comparison(cfg.problem.problem(), sim.t_max, sim.h)
        elif cfg.kind == "continuous":
            traj = integrate_scalar_comparison(cfg.problem, sim.t_max, sim.h)
        elif cfg.kind == "nonlinear_evolution":
            traj = simulate_nonlinear_evolution(cfg.problem, sim.t_max, sim.h)
        else:
            traj, sup, bound = simulate_linear_evolution(cfg.problem, sim.t_max, sim.h)
            extra.update(sup_norm=sup, exp_c_bound=bound)
    except FiniteEscape as exc:
        report = verify_bound(exc.trajectory, m)
        w.csv("trajectory.csv", header, _trajectory_rows(exc.trajectory, m))
        w.json("report.json", {**report.to_dict(), **extra, "finite_escape": True, "escape_time": exc.escape_time})
        log.info("simulate: finite escape near t=%.6g", exc.escape_time)
        return EXIT_ESCAPE
    report = verify_bound(traj, m)
    w.csv("trajectory.csv", header, _trajectory_rows(traj, m))
    w.json("report.json", {**report.to_dict(), **extra, "finite_escape": False,
                           "halving_error": traj.halving_error})
    log.info("simulate: max ratio %.6g", report.max_ratio)
    return EXIT_OK if report.satisfied else EXIT_REFUTED


def cmd_discrete(cfg: RunConfig, out_dir: Path) -> int:
    if cfg.kind != "discrete":
        raise UsageError("discrete needs a discrete problem")
    _require_majorant(cfg)
    d, mu = cfg.problem, cfg.mu_sequence()
    cert = certify_discrete(d, mu)
    w = _Writer(cfg, out_dir)
    data = cert.to_dict()
    data["seed"] = cfg.simulation.seed
    try:
        g = run_discrete_recursion(d)
    except DivergenceError as exc:
        data.update(divergence=True, diverged_at=exc.n)
        w.json("certificate.json", data)
        return EXIT_ESCAPE
    report = verify_bound(g, mu)
    data["recursion"] = report.to_dict()
    w.json("certificate.json", data)
    w.csv("sequence.csv", ["n", "g", "inv_mu"], ((n, g[n], 1.0 / mu[n]) for n in range(d.N + 1)))
    log.info("discrete: %s, max g*mu %.6g", cert.verdict.value, report.max_ratio)
    return _VERDICT_EXIT[cert.verdict]


def cmd_sweep(cfg: RunConfig, out_dir: Path) -> int:
    if cfg.kind != "powerlaw" or cfg.sweep is None:
        raise UsageError("sweep needs a powerlaw problem and a 'sweep' section")
    sim = cfg.simulation
    results = sweep_feasibility(cfg.problem, cfg.sweep.parameter, cfg.sweep.values, cfg.search.objective)
    feasible = [(i, cfg.problem.replace(**{cfg.sweep.parameter: v})) for i, (v, r) in enumerate(results) if r.feasible]
    ratios, status = {}, {}
    try:
        trajs = integrate_scalar_comparison_many([inst.problem() for _, inst in feasible], sim.t_max, sim.h)
        for (i, _), traj in zip(feasible, trajs):
            ratios[i] = verify_bound(traj, PowerLawMajorant(*results[i][1].best)).max_ratio
    except (FiniteEscape, ConvergenceError, IntegrationError):
        # fall back to row-by-row so one failing row does not sink the others
        for i, inst in feasible:
            try:
                traj = integrate_scalar_comparison(inst.problem(), sim.t_max, sim.h)
                ratios[i] = verify_bound(traj, PowerLawMajorant(*results[i][1].best)).max_ratio
            except (FiniteEscape, ConvergenceError, IntegrationError) as exc:
                status[i] = f"error: {type(exc).__name__}"
    rows = []
    for i, (v, r) in enumerate(results):
        lam, q = r.best if r.best else (None, None)
        st = status.get(i, "ok" if r.feasible else "infeasible")
        rows.append((v, r.feasible, lam, q, ratios.get(i), st))
    _Writer(cfg, out_dir).csv("sweep.csv", ["value", "feasible", "lambda", "q", "max_ratio", "status"], rows)
    return EXIT_ERROR if status else EXIT_OK


COMMANDS = {
    "certify": cmd_certify,
    "search": cmd_search,
    "simulate": cmd_simulate,
    "discrete": cmd_discrete,
    "sweep": cmd_sweep,
}


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    grid, sim = cfg.grid, cfg.simulation
    if args.grid_points is not None:
        grid = replace(grid, points=args.grid_points)
    if args.t_max is not None:
        grid = replace(grid, t_max=args.t_max)
        sim = replace(sim, t_max=args.t_max)
    if args.step is not None:
        sim = replace(sim, h=args.step)
    if args.seed is not None:
        sim = replace(sim, seed=args.seed)
    if not (sim.t_max > 0 and sim.h > 0):
        raise ConfigError("simulation", "t_max and h must be positive")
    return replace(cfg, grid=grid, simulation=sim)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gronwall", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--out", help="output directory (default: output.directory from the config)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--grid-points", type=int)
    parser.add_argument("--t-max", type=float)
    parser.add_argument("--step", type=float)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        out_dir = Path(args.out if args.out else cfg.output.directory)
        return COMMANDS[args.command](cfg, out_dir)
    except (ConfigError, UsageError, ValueError, ConvergenceError, IntegrationError, OSError) as exc:
        print(f"gronwall {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # keep the exit-code contract total
        log.debug("unexpected failure", exc_info=True)
        print(f"gronwall {args.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
