import numpy as np
import pytest

from capwave import io
from capwave.dynamics import Physics, initial_state
from capwave.geometry import GeometryConfig, build_reference_domain


@pytest.fixture(scope="module")
def state():
    dom = build_reference_domain(GeometryConfig(M=16, N=16))
    return initial_state(dom, Physics(sigma=0.1), "standing_wave", amplitude=0.01, mode=2)


def test_csv_round_trip(tmp_path):
    rows = [(0, 0.1, 1 / 3), (1, 0.2, np.pi)]
    io.write_csv(tmp_path / "a.csv", ["k", "t", "x"], rows)
    data = io.read_csv(tmp_path / "a.csv")
    assert data["x"][0] == 1 / 3 and data["x"][1] == np.pi
    with pytest.raises(ValueError):
        with io.CsvWriter(tmp_path / "b.csv", ["a", "b"]) as w:
            w.write([1])


def test_snapshot_round_trip(tmp_path, state):
    g, s = io.write_snapshot(tmp_path, 3, state)
    assert g.name == "grid_000003.txt" and s.name == "surface_000003.txt"
    nodes, P, header = io.read_grid_dump(g, "P_vv")
    assert np.array_equal(nodes, state.stage.mesh.nodes)
    assert header["step"] == "3" and int(header["M"]) == 16
    back = io.load_snapshot(s, state.domain, state.physics)
    assert np.array_equal(back.d, state.d) and np.array_equal(back.rate, state.rate)
    with pytest.raises(ValueError):
        io.read_grid_dump(g, "nope")


def test_read_errors(tmp_path):
    p = tmp_path / "empty.txt"
    p.write_text("# time = 0\n")
    with pytest.raises(ValueError):
        io.read_grid_dump(p)
    with pytest.raises(OSError):
        io.read_grid_dump(tmp_path / "missing.txt")


def test_manifest(tmp_path):
    m = {"b": 1, "a": [1.5, "x"]}
    io.write_manifest(tmp_path / "m.yaml", m)
    assert io.read_manifest(tmp_path / "m.yaml") == m
    assert (tmp_path / "m.yaml").read_text().startswith("b:")
