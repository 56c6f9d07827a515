import yaml
import pytest

from capwave.cli import main

CONFIG = """\
geometry: {M: 16, N: 16}
physics: {sigma: 0.1, omega_s: 0.45}
initial:
  standing_wave: {amplitude: 0.01, mode: 2}
numerics: {t_end: 0.1}
output: {cadence: 2, figures: %s}
"""


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    cfg = d / "c.yaml"
    cfg.write_text(CONFIG % "true")
    assert main(["simulate", "--config", str(cfg), "--out", str(d / "run")]) == 0
    return d


def test_simulate_outputs(run):
    out = run / "run"
    man = yaml.safe_load((out / "manifest.yaml").read_text())
    assert man["stop_reason"] == "completed"
    assert man["steps_completed"] == man["planned_steps"]
    assert abs(man["final_time"] - 0.1) < 1e-12
    assert len(man["config_hash"]) == 64
    rows = (out / "report.csv").read_text().splitlines()
    assert rows[0].startswith("step,t,")
    assert len(rows) == man["steps_completed"] + 2
    for f in man["snapshots"]:
        assert (out / f).exists()
    for f in ("energy.png", "contact.png", "surfaces.png", "pressure.png", "surfaces.csv"):
        assert (out / "figures" / f).exists()


def test_decompose(run, capsys, tmp_path):
    grid = sorted((run / "run" / "snapshots").glob("grid_*.txt"))[-1]
    assert main(["decompose", str(grid), "--field", "P_vv", "--r0", "0.6", "--out", str(tmp_path / "d.yaml")]) == 0
    rep = yaml.safe_load((tmp_path / "d.yaml").read_text())
    assert set(rep["corners"]) == {"left", "right"}
    assert rep["corners"]["left"]["exponent"] > 0
    assert main(["decompose", str(grid), "--r0", "0.25"]) == 2  # annulus too thin for this grid
    assert main(["decompose", str(tmp_path / "none.txt")]) == 3
    assert main(["decompose", str(grid), "--angles", "0.45", "0.7", "--r0", "0.6"]) == 2


def test_export(run, tmp_path):
    assert main(["export", str(run / "run"), "--out", str(tmp_path / "fig")]) == 0
    assert (tmp_path / "fig" / "energy.png").exists()
    assert main(["export", str(tmp_path / "nothing")]) == 3


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("geometry:\n  widht: 2\ninitial:\n  flat:\n")
    assert main(["simulate", "--config", str(bad)]) == 2
    assert "geometry.widht" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml")]) == 3
    coarse = tmp_path / "coarse.yaml"
    coarse.write_text("geometry: {M: 8}\ninitial:\n  flat:\n")
    assert main(["simulate", "--config", str(coarse), "--out", str(tmp_path / "r")]) == 2
    assert main(["verify", "nonsense"]) == 2
    assert main([]) == 2


def test_physics_stop_is_not_an_error(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text((CONFIG % "false").replace("t_end: 0.1", "t_end: 0.1, dt: 0.5"))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 0
    man = yaml.safe_load((tmp_path / "r" / "manifest.yaml").read_text())
    assert man["stop_reason"] == "cfl" and man["steps_completed"] == 0


def test_verify_suite(tmp_path, capsys):
    assert main(["verify", "--suite", "commutators", "--out", str(tmp_path / "v")]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL " not in out
    assert (tmp_path / "v" / "commutator_convergence.csv").exists()
    assert (tmp_path / "v" / "commutator_convergence.png").exists()


def test_stop_reason_mapping():
    from capwave.cli import stop_reason
    from capwave.errors import AngleExitError, CFLError, ConvergenceError, MeshFoldError, SelfIntersectionError

    assert stop_reason(CFLError("x")) == "cfl"
    assert stop_reason(AngleExitError("x")) == "angle_exit"
    assert stop_reason(ConvergenceError("x")) == "picard_fail"
    assert stop_reason(MeshFoldError("x")) == "mesh_fold"
    assert stop_reason(SelfIntersectionError("x")) == "mesh_fold"
    with pytest.raises(KeyError):
        stop_reason(KeyError("not a physics stop"))
