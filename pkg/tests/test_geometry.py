import numpy as np
import pytest

from capwave.errors import AngleExitError, DiffeomorphismError, GeometryError, MeshFoldError, SelfIntersectionError
from capwave.geometry import (
    GeometryConfig,
    SurfaceState,
    build_reference_domain,
    check_simple,
    contact_angles,
    domain_map,
    graded,
    rectangle_mesh,
    surface_from_displacement,
    trapezoid_mesh,
)


@pytest.fixture(scope="module")
def dom():
    return build_reference_domain(GeometryConfig(M=24, N=16))


def test_graded_endpoints_and_clustering():
    s = graded(32, 2.0, "both")
    assert s[0] == 0.0 and s[-1] == 1.0
    assert np.all(np.diff(s) > 0)
    h = np.diff(s)
    assert h[0] < h[16] and np.isclose(h[0], h[-1])
    t = graded(16, 2.0, "top")
    assert np.diff(t)[-1] < np.diff(t)[0]
    assert np.allclose(graded(8, 1.0), np.linspace(0, 1, 9))


@pytest.mark.parametrize(
    "kw, msg",
    [
        ({"M": 8}, "too coarse"),
        ({"omega_left": 0.6 * np.pi}, "not acute"),
        ({"width": 0.3}, "walls meet"),
        ({"width": -1.0}, "positive"),
        ({"mu_floor": 1.5}, "mu floor"),
    ],
)
def test_invalid_geometry(kw, msg):
    with pytest.raises(GeometryError, match=msg):
        build_reference_domain(GeometryConfig(**kw))


def test_rest_angles_match_reference(dom):
    fr = surface_from_displacement(dom, SurfaceState.from_displacement(np.zeros(dom.M + 1)))
    assert np.allclose(fr.angles, dom.omega_ref, atol=1e-12)
    assert np.allclose(fr.curvature, 0, atol=1e-10)
    assert np.all(fr.mu_dot_n >= dom.cfg.mu_floor)


def test_contact_angles_of_tilted_line():
    # straight surface at angle a against vertical walls: interior angles a and pi - a
    a = 0.1
    x = np.linspace(-1, 1, 11)
    pts = np.stack([x, np.tan(a) * x], axis=1)
    wl, wr = contact_angles(pts, np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    assert np.isclose(wl, np.pi / 2 + a) and np.isclose(wr, np.pi / 2 - a)


def test_surface_state_consistency():
    with pytest.raises(GeometryError):
        SurfaceState(np.zeros(5), 0.1, 0.0)
    s = SurfaceState.from_displacement([0.1, 0.0, 0.2])
    assert s.d_l == 0.1 and s.d_r == 0.2
    with pytest.raises(ValueError):
        s.displacement[0] = 1.0


def test_diffeomorphism_radius(dom):
    d = np.full(dom.M + 1, 1.5 * dom.d0)
    with pytest.raises(DiffeomorphismError):
        surface_from_displacement(dom, SurfaceState.from_displacement(d))


def test_self_intersection_detected():
    t = np.linspace(0, 2 * np.pi, 40)
    loop = np.stack([np.sin(2 * t), np.sin(t)], axis=1)  # figure eight
    bottom = np.array([[-2.0, -3.0], [2.0, -3.0]])
    with pytest.raises(SelfIntersectionError):
        check_simple(loop, bottom)
    check_simple(np.stack([t, 0 * t], axis=1), bottom)


def test_angle_exit():
    fr = surface_from_displacement(
        build_reference_domain(GeometryConfig(M=16, N=16)), SurfaceState.from_displacement(np.zeros(17))
    )
    fr.require_acute()
    bad = fr.__class__(**{**fr.__dict__, "omega_l": 0.6 * np.pi})
    with pytest.raises(AngleExitError):
        bad.require_acute()


def test_domain_map_moves_surface_only_smoothly(dom):
    x = dom.reference_surface[:, 0]
    d = 0.02 * np.cos(np.pi * (x + 1))
    nodes = domain_map(dom, SurfaceState.from_displacement(d)).values
    assert np.allclose(nodes[:, -1], dom.reference_surface + d[:, None] * dom.mu)
    assert np.allclose(nodes[:, 0], dom.nodes[:, 0], atol=0.05)


def test_mesh_areas():
    assert np.isclose(rectangle_mesh(2.0, 1.0, 16, 16, 1.5).area, 2.0)
    wl, wr = 0.4 * np.pi, 0.45 * np.pi
    m = trapezoid_mesh(2.0, 1.0, wl, wr, 16, 16)
    exact = 2.0 - 0.5 * (1 / np.tan(wl) + 1 / np.tan(wr))
    assert np.isclose(m.area, exact)
    assert np.min(m.cell_jacobians()) > 0
