import numpy as np
import pytest

from capwave.dynamics import (
    Physics,
    cfl_limit,
    check_compatibility,
    contact_rhs,
    fluid_area,
    initial_state,
    picard_refine,
    step,
)
from capwave.errors import CFLError
from capwave.geometry import GeometryConfig, build_reference_domain


@pytest.fixture(scope="module")
def dom():
    return build_reference_domain(GeometryConfig(M=16, N=16, omega_left=0.45 * np.pi, omega_right=0.45 * np.pi))


def _area(s):
    dom = s.domain
    return fluid_area(dom, dom.reference_surface + s.d[:, None] * dom.mu)


def test_physics_validation():
    with pytest.raises(ValueError):
        Physics(sigma=0.0)
    with pytest.raises(ValueError):
        Physics(omega_s=4.0)
    p = Physics(sigma=2.0, beta_c=4.0, omega_s=0.4 * np.pi)
    assert np.isclose(p.slip(0.5 * np.pi), 0.5 * np.cos(0.4 * np.pi))
    assert p.slip(0.4 * np.pi) == 0.0


def test_presets(dom):
    phys = Physics(omega_s=0.45 * np.pi)
    flat = initial_state(dom, phys, "flat")
    assert np.all(flat.d == 0) and np.all(flat.rate == 0)
    sw = initial_state(dom, phys, "standing_wave", amplitude=0.01, mode=2)
    assert np.isclose(np.max(np.abs(sw.d)), 0.01, rtol=0.05)
    ar = initial_state(dom, phys, "angle_relaxation", omega_0=0.4 * np.pi)
    assert np.allclose(ar.stage.frame.angles, 0.4 * np.pi, atol=1e-8)
    # the initial rate satisfies the slip law at both contact points
    assert np.allclose((ar.rate[0], ar.rate[-1]), contact_rhs(ar))
    with pytest.raises(ValueError):
        initial_state(dom, phys, "vortex")


def test_cfl_enforced(dom):
    s = initial_state(dom, Physics(), "flat")
    lim = cfl_limit(s)
    with pytest.raises(CFLError):
        step(s, 1.5 * lim)
    assert cfl_limit(initial_state(dom, Physics(sigma=4.0), "flat")) == pytest.approx(lim / 2)


def test_step_conserves_area_and_slip_law(dom):
    phys = Physics(sigma=0.1, omega_s=0.45 * np.pi)
    s = initial_state(dom, phys, "standing_wave", amplitude=0.01, mode=2)
    a0 = _area(s)
    dt = cfl_limit(s)
    for _ in range(3):
        s = step(s, dt)
    assert abs(_area(s) - a0) < 1e-12
    comp = check_compatibility(s)
    assert max(map(abs, comp["k0"])) < 1e-12
    assert s.time == pytest.approx(3 * dt)


def test_equilibrium_is_fixed(dom):
    s = initial_state(dom, Physics(omega_s=0.45 * np.pi), "flat")
    dt = cfl_limit(s)
    s1 = step(s, dt)
    assert np.max(np.abs(s1.d)) < 1e-12
    s2, rep = picard_refine(s, dt, return_report=True)
    assert rep.iterations == 1 and np.max(np.abs(s2.d)) < 1e-12


def test_picard_agrees_with_rk4(dom):
    phys = Physics(sigma=0.1, omega_s=0.45 * np.pi)
    s = initial_state(dom, phys, "standing_wave", amplitude=0.01, mode=2)
    dt = 0.5 * cfl_limit(s)
    a = step(s, dt)
    b, rep = picard_refine(s, dt, return_report=True)
    assert max(rep.contraction) < 1
    assert np.max(np.abs(a.d - b.d)) < 1e-3 * np.max(np.abs(s.d))
