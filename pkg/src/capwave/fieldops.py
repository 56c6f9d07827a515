"""Material derivatives, commutators with the material derivative, and pressure subsystems.

Conventions follow :mod:`capwave.mesh`: ``grad(v)[..., a, b] = d v_a / d x_b``, surface
derivatives ``d_tau`` act along the counterclockwise tangent.  The bottom is a polygon,
so its shape operator vanishes on every straight piece; at the floor corners the
velocity vanishes, and terms such as ``v . grad_v n_b`` are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import solver_for
from .mesh import GridField, Mesh

__all__ = [
    "PressureBundle",
    "trace_product",
    "material_derivative",
    "pressure_vv",
    "pressure_wv",
    "modified_curvature",
    "frak_j",
    "hodge_project",
    "dt_normal",
    "commutator_dt_grad_tau",
    "commutator_dt_laplace_beltrami",
    "commutator_dt_harmonic",
    "commutator_dt_dtn",
    "commutator_dt_inv_laplace",
    "commutator_source",
    "pressure_bundle",
]


def _v(x):
    return np.asarray(getattr(x, "values", x), float)


def trace_product(mesh: Mesh, w, v):
    """``tr(grad w grad v) = sum_ij d_i w_j d_j v_i``."""
    gw = mesh.grad(_v(w))
    gv = mesh.grad(_v(v))
    return np.einsum("...ab,...ba->...", gw, gv)


def bottom_shape_term(mesh: Mesh, a, b):
    """``a . grad_b n_b`` on the bottom nodes; zero on a polygonal bottom."""
    return np.zeros(len(mesh.bottom_index))


def _surface_vec(mesh, v):
    return _v(v)[:, mesh.N]


def material_derivative(mesh0: Mesh, F0, mesh1: Mesh, F1, v, dt, at="end"):
    """``D_t F`` from two snapshots whose nodes share reference labels.

    The pulled-back time difference follows the grid; the convective correction
    ``(v - grid velocity) . grad F`` is evaluated on the snapshot named by ``at``.
    """
    F0, F1 = _v(F0), _v(F1)
    grid_vel = (mesh1.nodes - mesh0.nodes) / dt
    mesh = mesh1 if at == "end" else mesh0
    F = F1 if at == "end" else F0
    rel = _v(v) - grid_vel
    g = mesh.grad(F)
    if F.ndim == 2:
        conv = np.einsum("...b,...b->...", rel, g)
    else:
        conv = np.einsum("...b,...ab->...a", rel, g)
    return (F1 - F0) / dt + conv


@dataclass(frozen=True)
class PressureBundle:
    P_vv: GridField
    C_vv: float
    K: np.ndarray
    K_H: GridField
    J: GridField
    P_Jv: GridField | None = None
    C_Jv: float | None = None


def pressure_vv(mesh: Mesh, v):
    """Neumann pressure ``Lap P = -tr(grad v grad v)`` with constant surface flux, mean zero."""
    return pressure_wv(mesh, v, v, surface_term=False)


def pressure_wv(mesh: Mesh, w, v, surface_term=True):
    """General ``P_{w,v}``; ``surface_term`` adds ``-(w . tau) grad_tau v . n`` to the surface flux."""
    solver = solver_for(mesh)
    h = -trace_product(mesh, w, v)
    g = bottom_shape_term(mesh, w, v)
    extra = np.zeros(mesh.M + 1)
    if surface_term:
        tau, n = mesh.surface_tangent, mesh.surface_normal
        ws = _surface_vec(mesh, w)
        dv = mesh.d_tau(_surface_vec(mesh, v))
        extra = -np.einsum("ia,ia->i", ws, tau) * np.einsum("ia,ia->i", dv, n)
    int_h = float(mesh.weights @ h.ravel())
    C = (int_h - float(mesh.surface_weights @ extra) - float(mesh.bottom_weights @ g)) / mesh.surface_length
    P = solver.nbvp(h, C + extra, g)
    return GridField(P, mesh.stamp, "pressure"), float(C)


def modified_curvature(sigma, kappa, P_vv_trace):
    return sigma * np.asarray(kappa, float) - np.asarray(P_vv_trace, float)


def frak_j(mesh: Mesh, K):
    """Harmonic extension of ``K`` and its gradient."""
    K_H = solver_for(mesh).harmonic_extension(K)
    return GridField(K_H, mesh.stamp), GridField(mesh.grad(K_H), mesh.stamp)


def hodge_project(mesh: Mesh, DtJ, v, J, K):
    """Divergence-free, bottom-tangent part of ``D_t J`` and the potential ``P_{J,v}``."""
    P, C = pressure_wv(mesh, J, v)
    curl = _v(DtJ) + mesh.grad(P.values)
    return GridField(curl, mesh.stamp), P, C


def dt_normal(mesh: Mesh, v):
    """``D_t n_t = -((grad v)^* n_t)^T = -(n_t . grad_tau v) tau_t``."""
    tau, n = mesh.surface_tangent, mesh.surface_normal
    dv = mesh.d_tau(_surface_vec(mesh, v))
    return -np.einsum("ia,ia->i", dv, n)[:, None] * tau


def stretch(mesh: Mesh, v):
    """Tangential stretching rate ``grad_tau v . tau_t``."""
    dv = mesh.d_tau(_surface_vec(mesh, v))
    return np.einsum("ia,ia->i", dv, mesh.surface_tangent)


def commutator_dt_grad_tau(mesh: Mesh, v, f):
    return -stretch(mesh, v) * mesh.d_tau(f)


def commutator_dt_laplace_beltrami(mesh: Mesh, v, f):
    """``[D_t, Lap_Gamma] f = -2 lam Lap_Gamma f - (tau . Lap_Gamma v) grad_tau f + kappa (grad_tau v . n) grad_tau f``

    with ``lam`` the stretching rate.
    """
    tau, n = mesh.surface_tangent, mesh.surface_normal
    vs = _surface_vec(mesh, v)
    dv = mesh.d_tau(vs)
    lap_v = mesh.laplace_beltrami(vs)
    df = mesh.d_tau(f)
    lam = np.einsum("ia,ia->i", dv, tau)
    return (
        -2 * lam * mesh.laplace_beltrami(f)
        - np.einsum("ia,ia->i", lap_v, tau) * df
        + mesh.curvature * np.einsum("ia,ia->i", dv, n) * df
    )


def commutator_source(mesh: Mesh, v, u):
    """Interior and bottom data ``(2 grad v : grad^2 u + Lap v . grad u, (grad_nb v - grad_v nb) . grad u)``."""
    v = _v(v)
    gu = mesh.grad(u)
    hess = mesh.hessian(u)
    gv = mesh.grad(v)
    lap_v = mesh.laplacian(v)
    h = 2 * np.einsum("...ab,...ab->...", gv, hess) + np.einsum("...a,...a->...", lap_v, gu)
    nb = mesh.bottom_normal
    gv_b = mesh.bottom_trace(gv)
    gu_b = mesh.bottom_trace(gu)
    dn_v = np.einsum("kab,kb->ka", gv_b, nb)
    g = np.einsum("ka,ka->k", dn_v, gu_b)
    return h, g


def commutator_dt_harmonic(mesh: Mesh, v, f):
    u = solver_for(mesh).harmonic_extension(f)
    h, g = commutator_source(mesh, v, u)
    return GridField(solver_for(mesh).inv_laplace(h, g), mesh.stamp)


def commutator_dt_dtn(mesh: Mesh, v, f):
    solver = solver_for(mesh)
    u = solver.harmonic_extension(f)
    h, g = commutator_source(mesh, v, u)
    w = solver.inv_laplace(h, g)
    dn_w = solver.surface_flux(w, h, g)
    tau, n = mesh.surface_tangent, mesh.surface_normal
    gu = _surface_vec(mesh, mesh.grad(u))
    gv = _surface_vec(mesh, mesh.grad(v))
    dn_v = np.einsum("iab,ib->ia", gv, n)
    dtau_v = mesh.d_tau(_surface_vec(mesh, v))
    return (
        dn_w
        - np.einsum("ia,ia->i", dn_v, gu)
        - np.einsum("ia,ia->i", gu, tau) * np.einsum("ia,ia->i", dtau_v, n)
    )


def commutator_dt_inv_laplace(mesh: Mesh, v, h, g):
    """``[D_t, Lap^{-1}](h, g) = Lap^{-1}(h_1, g_1)`` with data built from ``u = Lap^{-1}(h, g)``."""
    solver = solver_for(mesh)
    u = solver.inv_laplace(h, g)
    h1, g1 = commutator_source(mesh, v, u)
    return GridField(solver.inv_laplace(h1, g1), mesh.stamp)


def pressure_bundle(mesh: Mesh, v, sigma, kappa, DtJ=None):
    P_vv, C_vv = pressure_vv(mesh, v)
    K = modified_curvature(sigma, kappa, mesh.surface_trace(P_vv))
    K_H, J = frak_j(mesh, K)
    P_Jv = C_Jv = None
    if DtJ is not None:
        _, P_Jv, C_Jv = hodge_project(mesh, DtJ, v, J, K)
    return PressureBundle(P_vv, C_vv, K, K_H, J, P_Jv, C_Jv)
