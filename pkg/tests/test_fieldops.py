import numpy as np
import pytest

from capwave.fieldops import (
    dt_normal,
    frak_j,
    hodge_project,
    material_derivative,
    modified_curvature,
    pressure_vv,
    stretch,
    trace_product,
)
from capwave.geometry import rectangle_mesh, trapezoid_mesh
from capwave.mesh import Mesh


@pytest.fixture(scope="module")
def trap():
    return trapezoid_mesh(2.0, 1.0, 0.42 * np.pi, 0.45 * np.pi, 32, 32)


def _linear_field(mesh, A):
    return mesh.nodes @ np.asarray(A).T


def test_trace_product_of_linear_field(trap):
    A = np.array([[0.3, -0.7], [1.1, 0.2]])
    v = _linear_field(trap, A)
    assert np.allclose(trace_product(trap, v, v), np.trace(A @ A))


def test_pressure_vv_gauge_and_constant_flux(trap):
    v = _linear_field(trap, [[1.0, 0.5], [0.5, -1.0]])  # irrotational, divergence-free
    P, C = pressure_vv(trap, v)
    assert abs(trap.integrate(P.values)) < 1e-10
    # Lap P = -tr(A A) = -2.5; Gauss gives C * |surface| = -2.5 * |area| (the bottom is flux-free)
    assert np.isclose(C * trap.surface_length, -2.5 * trap.area)


def test_frak_j_of_linear_trace_is_harmonic(trap):
    K = 2.0 * trap.surface_points[:, 0]
    K_H, J = frak_j(trap, K)
    assert K_H.values.shape == trap.shape and J.values.shape == trap.shape + (2,)
    assert np.allclose(K_H.values[:, -1], K)


def test_hodge_projection_properties():
    m = rectangle_mesh(2.0, 1.0, 32, 32)
    x, z = m.nodes[..., 0], m.nodes[..., 1]
    v = np.stack([np.sin(x) * np.cosh(z), np.cos(x) * np.sinh(z)], -1) * 0.1
    J = np.stack([0 * x, np.ones_like(x)], -1)
    DtJ = np.stack([x * z, x**2], -1)
    curl, P, _ = hodge_project(m, DtJ, v, J, None)
    assert abs(m.integrate(P.values)) < 1e-10
    assert np.allclose(curl.values - DtJ, m.grad(P.values))
    # the correcting pressure is bilinear in (J, v)
    _, P0, C0 = hodge_project(m, DtJ, v, 0 * J, None)
    assert np.allclose(P0.values, 0) and C0 == 0
    _, P2, _ = hodge_project(m, DtJ, v, 2 * J, None)
    assert np.allclose(P2.values, 2 * P.values)


def test_material_derivative_of_advected_field():
    m0 = rectangle_mesh(2.0, 1.0, 16, 16)
    dt = 1e-3
    U = np.array([0.3, 0.0])
    m1 = Mesh(m0.nodes + dt * U)
    # F(x, t) = x - U_x t is constant along the uniform flow U
    F0 = m0.nodes[..., 0]
    F1 = m1.nodes[..., 0] - U[0] * dt
    v = np.broadcast_to(U, m0.shape + (2,))
    assert np.allclose(material_derivative(m0, F0, m1, F1, v, dt), 0, atol=1e-10)
    # a fixed field seen by a grid moving with the fluid: D_t x = U_x
    assert np.allclose(material_derivative(m0, m0.nodes[..., 0], m1, m1.nodes[..., 0], v, dt), U[0])


def test_surface_kinematics_of_rigid_rotation():
    m = rectangle_mesh(2.0, 1.0, 16, 16)
    w = 0.7
    v = w * np.stack([-m.nodes[..., 1], m.nodes[..., 0]], -1)
    assert np.allclose(stretch(m, v), 0, atol=1e-12)
    # the normal rotates with the fluid: D_t n = w * rot90(n)
    n = m.surface_normal
    assert np.allclose(dt_normal(m, v), w * np.stack([-n[:, 1], n[:, 0]], 1), atol=1e-12)


def test_modified_curvature():
    assert np.allclose(modified_curvature(2.0, [1.0, 0.5], [0.5, 0.5]), [1.5, 0.5])
