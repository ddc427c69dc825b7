import csv
import json
import math
import textwrap

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gronwall.cli import decimate, main
from gronwall.config import ConfigError, RunConfig, config_to_dict, emit_config, parse_config
from gronwall.problem import ExponentialMajorant, PowerLawInstance, PowerLawMajorant, Tabulated

CANON_YAML = """
problem:
  powerlaw: {c0: 1, p: 2, c1: 1, omega: 2, nu: 1, r: 3, g0: 0.5}
majorant:
  powerlaw: {lambda: 1, q: 1}
"""


def doc(text, **fields):
    """Canonical document with powerlaw fields replaced."""
    base = dict(c0=1, p=2, c1=1, omega=2, nu=1, r=3, g0=0.5)
    base.update(fields)
    body = ", ".join(f"{k}: {v}" for k, v in base.items())
    return f"problem:\n  powerlaw: {{{body}}}\n" + textwrap.dedent(text)


def run(tmp_path, command, text, *extra, name="cfg.yaml"):
    cfg = tmp_path / name
    cfg.write_text(text)
    out = tmp_path / f"out_{command}"
    code = main([command, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# --- parse_config -----------------------------------------------------------


def test_minimal_powerlaw_config():
    cfg = parse_config(doc(""))
    assert cfg.kind == "powerlaw"
    assert cfg.problem == PowerLawInstance(c0=1, p=2, c1=1, omega=2, r=3, nu=1, g0=0.5)
    assert cfg.majorant is None
    assert cfg.simulation.h == 1e-3


def test_p_below_one_is_rejected_with_path():
    with pytest.raises(ConfigError) as info:
        parse_config(doc("", p=0.9))
    assert info.value.path == "problem.powerlaw.p"
    assert "p > 1" in str(info.value)


def test_two_problem_kinds_rejected():
    text = """
problem:
  continuous: {gamma: 1, alpha: {zero: {}}, beta: 0, g0: 0.1}
  discrete: {N: 2, h: 0.5, gamma: 1, beta: 0, alpha: {zero: {}}, g0: 0.1}
"""
    with pytest.raises(ConfigError, match="exactly one problem kind"):
        parse_config(text)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError) as info:
        parse_config(doc("grid: {points: 11, spacingg: uniform}\n"))
    assert info.value.path == "grid.spacingg"
    assert "spacingg" in str(info.value)
    with pytest.raises(ConfigError):
        parse_config(doc("colour: blue\n"))


def test_yaml_syntax_error_has_line():
    with pytest.raises(ConfigError) as info:
        parse_config("problem:\n  powerlaw: {c0: 1\n  majorant: [\n")
    assert info.value.line is not None


def test_continuous_validation_error_path():
    text = "problem:\n  continuous: {gamma: 1, alpha: {powerlaw: {c0: 1, p: 0.5}}, beta: 0, g0: 0.1}\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.path == "problem.continuous.alpha"


def test_scientific_notation_numbers():
    cfg = parse_config(doc("simulation: {h: 1e-3, t_max: 5}\n"))
    assert cfg.simulation.h == 1e-3


def test_unsorted_sweep_values_rejected():
    with pytest.raises(ConfigError, match="sorted"):
        parse_config(doc("sweep: {parameter: r, values: [3, 2]}\n"))


def test_geometric_mu_sequence():
    text = """
problem:
  discrete: {N: 3, h: 0.5, gamma: 1, beta: 0, alpha: {zero: {}}, g0: 0.1}
majorant:
  geometric: {mu0: 2, rho: 1.5}
"""
    cfg = parse_config(text)
    np.testing.assert_allclose(cfg.mu_sequence(), [2, 3, 4.5, 6.75])


ROUND_TRIP_DOCS = [
    CANON_YAML,
    doc("majorant: {exponential: {mu0: 2, c: -0.5}}\nsweep: {parameter: g0, values: [0.1, 0.2]}\n"),
    """
problem:
  continuous:
    gamma: {tabulated: {points: [[0, 1], [2, 0.5]]}}
    alpha: {separable: {f: {exponential: {c: 1, k: 2}}, p: 1.5}}
    beta: {rational: {c: 0.1, e: 3}}
    g0: 0.25
majorant: {constant: {mu0: 1.5}}
grid: {t_max: 20, points: 51, spacing: uniform, tail_check: false}
output: {directory: results, formats: [json]}
""",
    """
problem:
  discrete: {N: 3, h: [0.5, 0.25, 0.5], gamma: 1, beta: [0, 0.1, 0], alpha: {powerlaw: {c0: 1, p: 2}}, g0: 0.1}
majorant: {sequence: [1, 1, 1, 1]}
""",
    """
problem:
  linear_evolution:
    S: [[0, 1], [-1, 0]]
    D: [0, -1]
    phi: 1
    B0: [[0, 0.5], [0, 0]]
    psi: {exponential: {c: 1, k: 1}}
    u0: [1, 0]
""",
    """
problem:
  nonlinear_evolution: {r: 3, nu: 1, c0: 1, p: 2, c1: 1, omega: 2, u0: [0.5, 0], S: [[0, 1], [-1, 0]]}
search: {objective: max_slack, lambda_points: 5, q_points: 5}
""",
]


@pytest.mark.parametrize("text", ROUND_TRIP_DOCS)
def test_round_trip(text):
    cfg = parse_config(text)
    again = parse_config(emit_config(cfg))
    assert config_to_dict(again) == config_to_dict(cfg)


@settings(max_examples=50)
@given(
    st.floats(0, 5), st.floats(1.01, 5), st.floats(0, 5), st.floats(0.1, 6),
    st.floats(0.1, 20), st.floats(0.05, 2), st.floats(0, 3), st.floats(0.01, 5), st.floats(0, 5),
)
def test_round_trip_property(c0, p, c1, omega, r, nu, g0, lam, q):
    cfg = RunConfig("powerlaw", PowerLawInstance(c0=c0, p=p, c1=c1, omega=omega, r=r, nu=nu, g0=g0),
                    PowerLawMajorant(lam, q))
    again = parse_config(emit_config(cfg))
    assert again.problem == cfg.problem and again.majorant == cfg.majorant


# --- commands ---------------------------------------------------------------


def test_certify_canonical(tmp_path):
    code, out = run(tmp_path, "certify", CANON_YAML)
    assert code == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["verdict"] == "CertifiedStrict"
    assert cert["mode"] == "ClosedForm"


def test_certify_r25_refuted(tmp_path):
    code, out = run(tmp_path, "certify", doc("majorant: {powerlaw: {lambda: 1, q: 1}}\n", r=2.5))
    assert code == 2
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["mode"] == "Grid" and cert["witness"] == 0.0
    assert cert["worst_gap"] == pytest.approx(-0.5)
    assert cert["closed_form"]["verdict"] == "Undecided"


def test_certify_near_equality_undecided(tmp_path):
    text = """
problem:
  continuous: {gamma: 0.9999999999999, alpha: {zero: {}}, beta: 0, g0: 0.5}
majorant: {exponential: {mu0: 1, c: 1}}
"""
    code, out = run(tmp_path, "certify", text)
    assert code == 3
    cert = json.loads((out / "certificate.json").read_text())
    assert -1e-12 < cert["worst_gap"] < 0


def test_certify_without_majorant_is_error(tmp_path):
    code, _ = run(tmp_path, "certify", doc(""))
    assert code == 1


def test_missing_config_is_error(tmp_path, capsys):
    assert main(["certify", "--config", str(tmp_path / "nope.yaml")]) == 1
    assert "nope.yaml" in capsys.readouterr().err


def test_bad_arguments_are_error():
    assert main(["frobnicate", "--config", "x"]) == 1


def test_search_canonical(tmp_path):
    code, out = run(tmp_path, "search", doc(""))
    assert code == 0
    res = json.loads((out / "search.json").read_text())
    assert (res["lambda"], res["q"]) == (1.0, 1.0)
    rows = read_csv(out / "region.csv")
    assert rows[0] == ["lambda", "q", "feasible", "slack"]
    assert len(rows) == 1 + 41 * 41


def test_search_r25_all_infeasible(tmp_path):
    code, out = run(tmp_path, "search", doc("", r=2.5))
    assert code == 2
    rows = read_csv(out / "region.csv")[1:]
    assert rows and all(r[2] == "false" for r in rows)


def test_search_large_r(tmp_path):
    code, out = run(tmp_path, "search", doc("", r=10, omega=5))
    assert code == 0
    assert json.loads((out / "search.json").read_text())["q"] == 4.0


def test_simulate_canonical(tmp_path):
    code, out = run(tmp_path, "simulate", CANON_YAML, "--t-max", "50")
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["satisfied"] and report["max_ratio"] <= 1
    rows = read_csv(out / "trajectory.csv")
    assert rows[0] == ["t", "g", "envelope", "ratio"]
    assert len(rows) - 1 <= 10_000
    ratios = [float(r[3]) for r in rows[1:]]
    assert max(ratios) == report["max_ratio"]


def test_simulate_blowup(tmp_path):
    text = """
problem:
  continuous: {gamma: 0, alpha: {powerlaw: {c0: 1, p: 2}}, beta: 0, g0: 1}
majorant: {constant: {mu0: 1}}
simulation: {t_max: 5, h: 1e-3}
"""
    code, out = run(tmp_path, "simulate", text)
    assert code == 4
    report = json.loads((out / "report.json").read_text())
    assert report["finite_escape"]
    assert report["escape_time"] == pytest.approx(1.0, abs=0.05)


def test_simulate_zero_problem(tmp_path):
    text = """
problem:
  continuous: {gamma: 0, alpha: {zero: {}}, beta: 0, g0: 0}
majorant: {exponential: {mu0: 3, c: 2}}
simulation: {t_max: 5, h: 1e-2}
"""
    code, out = run(tmp_path, "simulate", text)
    assert code == 0
    assert all(float(r[1]) == 0 for r in read_csv(out / "trajectory.csv")[1:])


def test_simulate_evolution_specs(tmp_path):
    lin = ROUND_TRIP_DOCS[4] + "simulation: {t_max: 5, h: 1e-2}\n"
    code, out = run(tmp_path, "simulate", lin)
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["sup_norm"] <= report["exp_c_bound"]
    nonlin = ROUND_TRIP_DOCS[5] + "simulation: {t_max: 5, h: 1e-2}\n"
    assert run(tmp_path, "simulate", nonlin, name="n.yaml")[0] == 0


def _discrete(g0=0.4, majorant="{sequence: [2, 2, 2, 2, 2]}"):
    return f"""
problem:
  discrete: {{N: 4, h: 0.5, gamma: 1, beta: 0, alpha: {{zero: {{}}}}, g0: {g0}}}
majorant: {majorant}
"""


def test_discrete_commands(tmp_path):
    code, out = run(tmp_path, "discrete", _discrete())
    assert code == 0
    rows = read_csv(out / "sequence.csv")
    assert rows[0] == ["n", "g", "inv_mu"]
    assert [float(r[1]) for r in rows[1:]] == [0.4 * 0.5**n for n in range(5)]
    assert run(tmp_path, "discrete", _discrete(g0=0.6), name="b.yaml")[0] == 2
    assert run(tmp_path, "discrete", _discrete(majorant="{geometric: {mu0: 1, rho: 2}}"), name="c.yaml")[0] == 2


def test_sweep_r(tmp_path):
    text = doc("sweep: {parameter: r, values: [2.5, 3, 4]}\nsimulation: {t_max: 10, h: 1e-3}\n")
    code, out = run(tmp_path, "sweep", text)
    assert code == 0
    rows = read_csv(out / "sweep.csv")
    assert rows[0] == ["value", "feasible", "lambda", "q", "max_ratio", "status"]
    assert [r[1] for r in rows[1:]] == ["false", "true", "true"]
    assert rows[2][2:4] == ["1", "1"]
    assert float(rows[2][4]) <= 1
    assert rows[1][4] == "" and rows[1][5] == "infeasible"


def test_sweep_empty(tmp_path):
    code, out = run(tmp_path, "sweep", doc("sweep: {parameter: r, values: []}\n"))
    assert code == 0
    assert (out / "sweep.csv").read_text() == "value,feasible,lambda,q,max_ratio,status\n"


def test_sweep_g0_flip(tmp_path):
    text = doc("sweep: {parameter: g0, values: [0.5, 0.99, 1.0, 1.01]}\nsimulation: {t_max: 5, h: 1e-2}\n")
    code, out = run(tmp_path, "sweep", text)
    assert code == 0
    assert [r[1] for r in read_csv(out / "sweep.csv")[1:]] == ["true", "true", "false", "false"]


@pytest.mark.parametrize(
    "command, text, files",
    [
        ("search", doc(""), ["region.csv"]),
        ("simulate", CANON_YAML + "simulation: {t_max: 5, h: 1e-3}\n", ["trajectory.csv"]),
        ("sweep", doc("sweep: {parameter: r, values: [3, 4]}\nsimulation: {t_max: 5, h: 1e-3}\n"), ["sweep.csv"]),
        ("discrete", _discrete(), ["sequence.csv"]),
    ],
)
def test_csv_outputs_are_bit_identical(tmp_path, command, text, files):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    first = run(a, command, text)[1]
    second = run(b, command, text, "--seed", "0")[1]
    for name in files:
        raw = (first / name).read_bytes()
        assert raw == (second / name).read_bytes()
        assert b"\r" not in raw


def test_csv_uses_seventeen_significant_digits(tmp_path):
    _, out = run(tmp_path, "simulate", CANON_YAML + "simulation: {t_max: 1, h: 1e-3}\n")
    rows = read_csv(out / "trajectory.csv")[1:]
    for row in rows[:50]:
        for cell in row:
            assert float(format(float(cell), ".17g")) == float(cell)
            assert "," not in cell
    assert float(rows[1][0]) == 1e-3


def test_flags_override_config(tmp_path):
    code, out = run(tmp_path, "simulate", CANON_YAML + "simulation: {t_max: 50, h: 1e-3}\n",
                    "--t-max", "2", "--step", "0.01", "--seed", "7")
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert (report["t_max"], report["h"], report["seed"]) == (2.0, 0.01, 7)


def test_grid_points_flag(tmp_path):
    text = doc("majorant: {exponential: {mu0: 1, c: 0.1}}\n")
    code, out = run(tmp_path, "certify", text, "--grid-points", "17", "--t-max", "3")
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["grid"]["points"] == 17 and cert["grid"]["t_max"] == 3.0


def test_json_only_output(tmp_path):
    _, out = run(tmp_path, "search", doc("output: {formats: [json]}\n"))
    assert (out / "search.json").exists() and not (out / "region.csv").exists()


@given(st.integers(1, 50_000), st.data())
def test_decimate_keeps_limits_and_worst(n, data):
    keep = data.draw(st.integers(0, n - 1))
    idx = decimate(n, keep)
    assert len(idx) <= 10_000
    assert idx[0] == 0 and idx[-1] == n - 1
    assert keep in idx
    assert np.all(np.diff(idx) > 0)
