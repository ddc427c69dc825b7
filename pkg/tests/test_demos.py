import runpy
from pathlib import Path

import pytest

from gronwall.cli import main

DEMOS = Path(__file__).resolve().parent.parent / "demos"


@pytest.mark.parametrize("script", sorted(DEMOS.glob("*.py")), ids=lambda p: p.name)
def test_demo_runs(script, capsys):
    runpy.run_path(str(script), run_name="__main__")
    assert capsys.readouterr().out


@pytest.mark.parametrize(
    "command, name, code",
    [
        ("certify", "canonical", 0),
        ("search", "canonical", 0),
        ("simulate", "blowup", 4),
        ("discrete", "discrete", 0),
        ("sweep", "sweep_r", 0),
    ],
)
def test_sample_configs(tmp_path, command, name, code):
    cfg = DEMOS / "configs" / f"{name}.yaml"
    assert main([command, "--config", str(cfg), "--out", str(tmp_path)]) == code
