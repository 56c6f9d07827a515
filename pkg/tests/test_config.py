import numpy as np
import pytest

from capwave.config import config_hash, load_config, parse_config
from capwave.errors import ConfigError

GOOD = """\
geometry:
  width: 2.0
  omega_left: 0.4
  M: 16
  N: 16
physics:
  sigma: 0.5
  omega_s: 0.42
initial:
  angle_relaxation: {omega_0: 0.45}
numerics:
  t_end: 0.05
  integrator: picard
output:
  dir: out
"""


def test_parse_good():
    cfg = parse_config(GOOD)
    assert np.isclose(cfg.geometry.omega_left, 0.4 * np.pi)
    assert np.isclose(cfg.geometry.omega_right, 0.45 * np.pi)  # default
    assert np.isclose(cfg.physics.omega_s, 0.42 * np.pi)
    assert cfg.preset == "angle_relaxation"
    assert np.isclose(cfg.preset_params["omega_0"], 0.45 * np.pi)
    assert cfg.numerics.integrator == "picard"
    assert cfg.physics.c_cfl == cfg.numerics.cfl
    canon = cfg.canonical()
    assert np.isclose(canon["geometry"]["omega_left"], 0.4)
    assert canon["initial"] == {"angle_relaxation": {"omega_0": pytest.approx(0.45)}}


def test_hash_ignores_formatting_but_not_values():
    a = parse_config(GOOD)
    b = parse_config(GOOD.replace("width: 2.0", "width: 2"))
    c = parse_config(GOOD.replace("sigma: 0.5", "sigma: 0.6"))
    assert config_hash(a) == config_hash(b) != config_hash(c)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("geometry:\n  widht: 2\ninitial:\n  flat:\n", "geometry.widht: unknown key"),
        ("geometry:\n  M: 16.5\ninitial:\n  flat:\n", "geometry.M: expected an integer"),
        ("physics:\n  sigma: -1\ninitial:\n  flat:\n", "physics.sigma: must be > 0"),
        ("geometry:\n  omega_left: 0.7\ninitial:\n  flat:\n", "geometry.omega_left: must be < 0.5"),
        ("numerics:\n  integrator: euler\ninitial:\n  flat:\n", "must be one of rk4, picard"),
        ("initial:\n  flat:\n  standing_wave:\n", "exactly one preset"),
        ("initial:\n  vortex:\n", "unknown preset"),
        ("initial:\n  angle_relaxation: {width: 0.2}\n", "omega_0: a value is required"),
        ("geometry: {M: 16}\n", "initial: exactly one preset"),
        ("extra: 1\ninitial:\n  flat:\n", "unknown block"),
        ("output:\n  figures: 1\ninitial:\n  flat:\n", "expected true/false"),
        ("geometry: [1, 2\n", "YAML syntax error"),
        ("", "empty configuration"),
    ],
)
def test_errors_name_the_key(text, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("(", r"\(").replace(".", r"\.")):
        parse_config(text)


def test_error_reports_line():
    with pytest.raises(ConfigError, match=r"\(line 3\)"):
        parse_config("geometry:\n  M: 16\n  bogus: 1\ninitial:\n  flat:\n")


def test_load_config(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(GOOD)
    assert load_config(p).output.dir == "out"
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.yaml")
