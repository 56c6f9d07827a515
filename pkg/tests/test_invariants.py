"""Module invariants as property tests (hypothesis drives the random data)."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from capwave import fieldops as fo
from capwave.elliptic import dtn
from capwave.elliptic.singular import corner_map, local_fit_order, singular_decompose, singular_mode
from capwave.geometry import (
    GeometryConfig,
    SurfaceState,
    build_reference_domain,
    graded,
    phi_inverse,
    trapezoid_mesh,
)
from capwave.mesh import curve_frame

DOM = build_reference_domain(GeometryConfig(M=24, N=16))
TRAP = trapezoid_mesh(2.0, 1.0, 0.4 * np.pi, 0.45 * np.pi, 24, 24)
M1 = TRAP.M + 1
surface_data = arrays(np.float64, M1, elements=st.floats(-1, 1, allow_nan=False))


# ------------------------------------------------------------------ geometry
@settings(max_examples=20, deadline=None)
@given(amp=st.floats(-0.05, 0.05), mode=st.integers(1, 4))
def test_phi_inverse_round_trip(amp, mode):
    x = DOM.reference_surface[:, 0]
    d = amp * np.cos(mode * np.pi * (x + 1) / 2)
    state = SurfaceState.from_displacement(d)
    X = DOM.reference_surface + d[:, None] * DOM.mu
    assert np.max(np.abs(phi_inverse(DOM, state, X) - x)) < 1e-10


@pytest.mark.parametrize("grading, nodes", [(1.0, slice(None)), (1.5, slice(1, -1))])
def test_circle_curvature_second_order(grading, nodes):
    R = 2.0
    errs, hs = [], []
    for n in (16, 32, 64):
        # arc bulging upward, ordered left to right
        th = np.pi / 2 + 0.6 * (1 - 2 * graded(n, grading))
        pts = R * np.stack([np.cos(th), np.sin(th)], 1)
        _, _, kappa, _ = curve_frame(pts)
        errs.append(np.max(np.abs(kappa - 1 / R)[nodes]))
        hs.append(1.0 / n)
    order = np.min(np.diff(np.log(errs)) / np.diff(np.log(hs)))
    assert order >= 1.9


# ------------------------------------------------------------------ elliptic
def test_dtn_gram_spectrum():
    S = TRAP.surface_mass.toarray() if hasattr(TRAP.surface_mass, "toarray") else TRAP.surface_mass
    Nmat = np.column_stack([dtn(TRAP, e).values for e in np.eye(M1)])
    G = S @ Nmat
    assert np.max(np.abs(G - G.T)) <= 1e-8 * np.max(np.abs(G))
    ev = np.linalg.eigvalsh(0.5 * (G + G.T))
    assert ev.min() >= -1e-8 * ev.max()
    assert np.sum(ev < 1e-8 * ev.max()) == 1  # null space = constants


@settings(max_examples=25, deadline=None)
@given(f=surface_data)
def test_dtn_zero_net_flux(f):
    flux = TRAP.surface_weights @ dtn(TRAP, f).values
    assert abs(flux) <= 1e-8 * max(np.linalg.norm(f), 1e-300) + 1e-14


@pytest.mark.parametrize("kind", ["mixed", "neumann"])
def test_singular_extraction_improves_local_order(kind):
    om = 0.45 * np.pi
    m = trapezoid_mesh(2.0, 1.0, om, om, 64, 32, 2.0)
    X = m.nodes
    x, z = X[..., 0], X[..., 1]
    u = 0.3 + 0.2 * x - 0.1 * z**2 + 0.15 * x**3
    for c, side in zip((0.7, -0.4), "lr"):
        cm = corner_map(m, side, om)
        r, th = cm.polar(X.reshape(-1, 2))
        s = np.clip((r - 0.25) / 0.25, 0, 1)
        u = u + (c * singular_mode(r, th, om, kind) * (1 - s * s * (3 - 2 * s))).reshape(m.shape)
    dec = singular_decompose(m, u, kind, (om, om), 0.25)
    radii = np.geomspace(0.06, 0.25, 6)
    cm = corner_map(m, "l", om)
    before, _ = local_fit_order(m, u, cm, radii)
    after, _ = local_fit_order(m, dec.regular.values, cm, radii)
    assert after - before >= 0.5


# ------------------------------------------------------------------ fieldops
@settings(max_examples=10, deadline=None)
@given(f=surface_data)
def test_commutators_vanish_at_rest(f):
    v = np.zeros(TRAP.shape + (2,))
    h = np.outer(f, np.ones(TRAP.N + 1))
    g = np.zeros(len(TRAP.bottom_index))
    assert np.max(np.abs(fo.commutator_dt_harmonic(TRAP, v, f).values)) <= 1e-12
    assert np.max(np.abs(fo.commutator_dt_dtn(TRAP, v, f))) <= 1e-12
    assert np.max(np.abs(fo.commutator_dt_laplace_beltrami(TRAP, v, f))) <= 1e-12
    assert np.max(np.abs(fo.commutator_dt_grad_tau(TRAP, v, f))) <= 1e-12
    assert np.max(np.abs(fo.commutator_dt_inv_laplace(TRAP, v, h, g).values)) <= 1e-12


@settings(max_examples=10, deadline=None)
@given(c=st.floats(-1e3, 1e3))
def test_pressure_vv_gauge_invariance(c):
    x, z = TRAP.nodes[..., 0], TRAP.nodes[..., 1]
    phi = 0.1 * np.cos(x) * np.cosh(z)
    P1, _ = fo.pressure_vv(TRAP, TRAP.grad(phi))
    P2, _ = fo.pressure_vv(TRAP, TRAP.grad(phi + c))
    assert np.max(np.abs(P1.values - P2.values)) <= 1e-9 * (1 + np.max(np.abs(P1.values)))


def test_trace_identity_first_order():
    errs, hs = [], []
    for n in (16, 32, 64):
        m = trapezoid_mesh(2.0, 1.0, 0.4 * np.pi, 0.45 * np.pi, n, n)
        x = m.surface_points[:, 0]
        K = np.cos(np.pi * (x + 1) / 2)
        _, J = fo.frak_j(m, K)
        Jn = np.einsum("ia,ia->i", J.values[:, -1], m.surface_normal)
        NK = dtn(m, K).values
        inner = np.abs(x) < 0.6  # away from the corner singularities
        errs.append(np.max(np.abs(Jn - NK)[inner]))
        hs.append(2.0 / n)
    order = np.min(np.diff(np.log(errs)) / np.diff(np.log(hs)))
    assert order >= 0.9
