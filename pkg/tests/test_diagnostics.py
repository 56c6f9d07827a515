import numpy as np
import pytest

from capwave import diagnostics as dg
from capwave.dynamics import Physics, cfl_limit, initial_state, step
from capwave.geometry import GeometryConfig, build_reference_domain


@pytest.fixture(scope="module")
def history():
    dom = build_reference_domain(GeometryConfig(M=16, N=16))
    s = initial_state(dom, Physics(sigma=0.1, omega_s=0.4 * np.pi), "angle_relaxation", omega_0=0.45 * np.pi)
    dt = cfl_limit(s)
    h = [s]
    for _ in range(3):
        h.append(step(h[-1], dt))
    return h


def test_slobodeckij_of_constant_and_scaling():
    x = np.linspace(0, 1, 41)
    assert dg.slobodeckij_seminorm(x, np.ones_like(x)) == 0.0
    f = np.sin(2 * x)
    # the squared seminorm is quadratic in f
    assert np.isclose(dg.slobodeckij_seminorm(x, 3 * f), 9 * dg.slobodeckij_seminorm(x, f))


def test_symbolic_energy_law():
    law = dg.derive_energy_law()
    assert law["contact_dissipation"]


def test_report_row(history):
    rep = dg.energy_report(history, k=1)
    row = rep.row()
    assert len(row) == len(dg.EnergyReport.columns())
    assert rep.F >= 0 and rep.F1 >= 0
    assert rep.t == history[1].time
    assert 0 < rep.omega_l < np.pi / 2


def test_history_too_short(history):
    with pytest.raises(ValueError):
        dg.energy_report(history[:1])


def test_physical_energy_decays(history):
    e = [dg.physical_energy(s) for s in history]
    assert np.all(np.diff(e) <= 1e-12)


def test_dissipation_vanishes_at_equilibrium():
    dom = build_reference_domain(GeometryConfig(M=16, N=16))
    s = initial_state(dom, Physics(omega_s=0.45 * np.pi), "flat")
    assert dg.dissipation(s) == 0.0
    assert np.isclose(dg.taylor_sign(s), s.physics.g)
