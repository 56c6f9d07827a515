import numpy as np
import pytest

from capwave.elliptic import dtn, harmonic_extension, inv_laplace, solve_mbvp, solve_nbvp
from capwave.elliptic.singular import corner_map, gate, singular_decompose, singular_exponent, singular_mode
from capwave.errors import CompatibilityError
from capwave.geometry import rectangle_mesh, trapezoid_mesh


@pytest.fixture(scope="module")
def rect():
    return rectangle_mesh(2.0, 1.0, 32, 32)


@pytest.fixture(scope="module")
def trap():
    return trapezoid_mesh(2.0, 1.0, 0.4 * np.pi, 0.45 * np.pi, 32, 32)


def test_harmonic_extension_of_constant(trap):
    u = harmonic_extension(trap, np.full(trap.M + 1, 3.0)).values
    assert np.allclose(u, 3.0)
    assert np.allclose(dtn(trap, np.ones(trap.M + 1)).values, 0, atol=1e-10)


def test_mbvp_linear_solution_exact(rect):
    # u = x lies in the Q1 space; its bottom flux is given as the vector field grad u
    x = rect.nodes[..., 0]
    grad = np.tile([1.0, 0.0], (len(rect.bottom_points), 1))
    u = solve_mbvp(rect, h=None, f=rect.surface_points[:, 0], g=grad).values
    assert np.max(np.abs(u - x)) < 1e-12


def test_dtn_symmetric_positive(trap):
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((2, trap.M + 1))
    Na, Nb = dtn(trap, a).values, dtn(trap, b).values
    S = trap.surface_mass
    assert abs(b @ S @ Na - a @ S @ Nb) < 1e-10 * (1 + abs(a @ S @ Na))
    assert a @ S @ Na > 0
    assert abs(trap.surface_weights @ Na) < 1e-10


def test_dtn_cosine_mode(rect):
    k = np.pi
    x = rect.surface_points[:, 0]
    f = np.cos(k * (x + 1))
    got = dtn(rect, f).values
    inner = slice(4, -4)
    assert np.allclose(got[inner], k * np.tanh(k) * f[inner], atol=0.03 * k)


def test_nbvp_compatibility(rect):
    with pytest.raises(CompatibilityError):
        solve_nbvp(rect, h=np.ones(rect.shape), f=np.zeros(rect.M + 1))
    u = solve_nbvp(rect, h=np.zeros(rect.shape), f=np.zeros(rect.M + 1)).values
    assert np.allclose(u, 0)


def test_inv_laplace_dirichlet_surface(rect):
    x, z = rect.nodes[..., 0], rect.nodes[..., 1]
    h = np.cos(np.pi * (x + 1))
    u = inv_laplace(rect, h).values
    assert np.allclose(u[:, -1], 0)
    # Lap u = h, u = 0 on the surface, no flux through the walls and floor
    exact = -h / np.pi**2 * (1 - np.cosh(np.pi * (z + 1)) / np.cosh(np.pi))
    assert np.max(np.abs(u - exact)) < 2e-3


@pytest.mark.parametrize("omega", [0.35 * np.pi, 0.45 * np.pi])
def test_singular_exponents(omega):
    assert np.isclose(singular_exponent(omega, "neumann"), np.pi / omega)
    assert np.isclose(singular_exponent(omega, "mixed"), np.pi / (2 * omega))
    assert gate(omega, "neumann") and not gate(0.3 * np.pi, "neumann")


def test_singular_mode_boundary_conditions():
    om = 0.4 * np.pi
    r = np.array([0.3])
    eps = 1e-6
    for kind in ("neumann", "mixed"):
        d0 = (singular_mode(r, np.array([eps]), om, kind) - singular_mode(r, np.array([0.0]), om, kind)) / eps
        assert abs(d0[0]) < 1e-4  # flux-free on the wall
    assert abs(singular_mode(r, np.array([om]), om, "mixed")[0]) < 1e-12  # Dirichlet on the surface


def test_decompose_recovers_coefficient(trap):
    cm = corner_map(trap, "l")
    pts = trap.nodes.reshape(-1, 2)
    r, th = cm.polar(pts)
    s = np.clip((r - 0.25) / 0.25, 0, 1)
    cut = 1 - s * s * (3 - 2 * s)  # 1 on the fitting disk
    u = 0.7 * singular_mode(r, th, cm.omega, "mixed") * cut
    dec = singular_decompose(trap, u.reshape(trap.shape), "mixed", r0=0.25)
    assert abs(dec.c_l - 0.7) < 0.02 * 0.7
    assert abs(dec.c_r) < 0.02
