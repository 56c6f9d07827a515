"""Energy functionals, dissipation, Taylor sign and identity residuals.

Time derivatives are taken from short histories of :class:`~capwave.dynamics.FlowState`
snapshots that share reference labels: centred in the middle of a history, one-sided at
its ends, with the convective correction ``(v - grid velocity) . grad`` evaluated on the
snapshot where the derivative is wanted.  ``J`` denotes the gradient of the harmonic
extension of the modified curvature, ``J_perp = J . n`` its normal trace.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np

from .dynamics import FlowState, euler_rhs, fluid_area
from .geometry import contact_angles
from .elliptic import solver_for
from .fieldops import commutator_dt_laplace_beltrami, dt_normal, pressure_vv, pressure_wv

__all__ = [
    "EnergyReport",
    "Snapshot",
    "energy_low",
    "dissipation",
    "energy_high",
    "energy_variant",
    "taylor_sign",
    "j_equation_residual",
    "contact_relation_residual",
    "physical_energy",
    "physical_energy_law",
    "derive_energy_law",
    "slobodeckij_seminorm",
    "surface_sobolev_proxy",
    "velocity_sobolev_proxy",
    "energy_report",
]


class HistoryError(ValueError):
    """Raised when a diagnostic needs more snapshots than supplied."""


def _need(history, n):
    if len(history) < n:
        raise HistoryError(f"insufficient history: need {n} states, got {len(history)}")


def _dot(a, b):
    return np.einsum("...a,...a->...", a, b)


def _matvec_T(G, w):
    """``(grad v)^* w``: ``sum_a d_b v_a w_a``."""
    return np.einsum("...ab,...a->...b", G, w)


# ------------------------------------------------------------------ snapshot
class Snapshot:
    """Fields of one instant needed by the diagnostics, computed once.

    Built from a :class:`FlowState` with :meth:`from_state`, or directly from a mesh,
    a velocity and the surface pressure data ``K`` of a prescribed flow.
    """

    def __init__(self, mesh, v, time, physics, K, P_vv=None, Dt_v=None, r0=0.25, walls=None, angles=None):
        self.mesh = mesh
        self.solver = solver_for(mesh)
        self.v = np.asarray(v, float)
        self.time = float(time)
        self.phys = physics
        self.P = pressure_vv(mesh, self.v)[0].values if P_vv is None else np.asarray(P_vv, float)
        self.K = np.asarray(K, float)
        self.J = mesh.grad(self.solver.harmonic_extension(self.K))
        self.r0 = r0
        self._Dt_v = Dt_v
        if walls is None:
            N, M = mesh.N, mesh.M
            down = mesh.nodes[0, N - 1] - mesh.nodes[0, N]
            up = mesh.nodes[M, N] - mesh.nodes[M, N - 1]
            walls = (down / np.linalg.norm(down), up / np.linalg.norm(up))
        self.tau_b = walls
        if angles is None:
            X = mesh.surface_points
            angles = contact_angles(X, -walls[0], walls[1])
        self.angles = tuple(float(a) for a in angles)

    @classmethod
    def from_state(cls, state: FlowState):
        st = state.stage
        dom = state.domain
        snap = cls(
            st.mesh, st.v, state.time, state.physics, st.K, P_vv=st.P_vv, r0=dom.r0,
            walls=(-dom.up_left, dom.up_right), angles=st.frame.angles,
        )
        snap.state = state
        return snap

    @cached_property
    def Dt_v(self):
        if self._Dt_v is not None:
            return np.asarray(self._Dt_v, float)
        return euler_rhs(self.state).values

    @cached_property
    def G(self):
        return self.mesh.grad(self.v)

    @cached_property
    def n(self):
        return self.mesh.surface_normal

    @cached_property
    def tau(self):
        return self.mesh.surface_tangent

    @cached_property
    def grad_P(self):
        return self.mesh.grad(self.P)

    @cached_property
    def J_perp(self):
        return _dot(self.J[:, self.mesh.N], self.n)

    @cached_property
    def dtau_J_perp(self):
        """``(grad_tau J) . n`` along the surface."""
        return _dot(self.mesh.d_tau(self.J[:, self.mesh.N]), self.n)

    @cached_property
    def P_Jv(self):
        return pressure_wv(self.mesh, self.J, self.v)[0].values

    @cached_property
    def corner_grad_P(self):
        """``grad P_vv|_c``: corner values of ``grad P_vv`` on the indicator of each corner disk."""
        m = self.mesh
        out = np.zeros(m.nodes.shape)
        for i in (0, m.M):
            p = m.nodes[i, m.N]
            chi = np.linalg.norm(m.nodes - p, axis=-1) <= self.r0
            out[chi] = self.grad_P[i, m.N]
        return out

    @cached_property
    def w_A2(self):
        return self.solver.inv_laplace(*_commutator_data(self, self.J))

    def grad_H(self, f):
        return self.mesh.grad(self.solver.harmonic_extension(f))

    def trace(self, F):
        return np.asarray(F)[:, self.mesh.N]


def _snap(x):
    if isinstance(x, Snapshot):
        return x
    c = x.__dict__.get("_diag")
    if c is None:
        c = Snapshot.from_state(x)
        x.__dict__["_diag"] = c
    return c


def _commutator_data(s: Snapshot, w):
    """``(2 grad v : grad w + Lap v . w, (d_nb v) . w)``: data of ``[D_t, H]`` for ``w = grad H f``."""
    m = s.mesh
    Gw = m.grad(w)
    h = 2 * np.einsum("...ab,...ab->...", s.G, Gw) + _dot(m.laplacian(s.v), w)
    nb = m.bottom_normal
    Gv_b = m.bottom_trace(s.G)
    g = _dot(np.einsum("kab,kb->ka", Gv_b, nb), m.bottom_trace(w))
    return h, g


def _time_stencil(n, k, dt):
    """Indices and weights of a second-order time derivative at ``k`` (one-sided at the ends)."""
    if n == 2:
        return (0, 1), (-1 / dt, 1 / dt)
    if 0 < k < n - 1:
        return (k - 1, k + 1), (-0.5 / dt, 0.5 / dt)
    if k == 0:
        return (0, 1, 2), (-1.5 / dt, 2 / dt, -0.5 / dt)
    return (n - 3, n - 2, n - 1), (0.5 / dt, -2 / dt, 1.5 / dt)


def _apply(idx, wts, items):
    return sum(w * np.asarray(items[i]) for i, w in zip(idx, wts))


def _material(snaps, k, fields, dt):
    """Material derivative at snapshot ``k``: grid-following time difference plus ``(v - W) . grad``.

    ``W`` is the grid velocity from the same stencil, so on a Lagrangian grid the
    convective term vanishes.
    """
    s = snaps[k]
    idx, wts = _time_stencil(len(snaps), k, dt)
    W = _apply(idx, wts, [q.mesh.nodes for q in snaps])
    rel = s.v - W
    F = np.asarray(fields[k])
    gF = s.mesh.grad(F)
    conv = _dot(rel, gF) if F.ndim == 2 else np.einsum("...b,...ab->...a", rel, gF)
    return _apply(idx, wts, fields) + conv


def _surface_material(snaps, k, fields, dt):
    """Material derivative of surface data, with the tangential part of ``v - W``."""
    s = snaps[k]
    idx, wts = _time_stencil(len(snaps), k, dt)
    W = _apply(idx, wts, [q.mesh.surface_points for q in snaps])
    rel = _dot(s.trace(s.v) - W, s.tau)
    return _apply(idx, wts, fields) + rel * s.mesh.d_tau(np.asarray(fields[k]))


def _history_dt(history):
    t = np.array([s.time for s in history])
    dts = np.diff(t)
    if len(dts) and not np.allclose(dts, dts[0], rtol=1e-9, atol=1e-14):
        raise HistoryError("history must be equally spaced in time")
    return float(dts[0]) if len(dts) else None


# ---------------------------------------------------------- Sobolev proxies
def slobodeckij_seminorm(x, f, s=0.5, weights=None):
    """Double-integral Gagliardo seminorm ``int int |f(x)-f(y)|^2 / |x-y|^(1+2s)`` (trapezoid nodes)."""
    x = np.asarray(x, float)
    f = np.asarray(f, float)
    if weights is None:
        dx = np.diff(x)
        weights = np.zeros_like(x)
        weights[:-1] += dx / 2
        weights[1:] += dx / 2
    diff = f[:, None] - f[None, :]
    if diff.ndim == 3:
        diff = np.sum(diff**2, axis=-1)
    else:
        diff = diff**2
    dist = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(dist, np.inf)
    return float(weights @ (diff / dist ** (1 + 2 * s)) @ weights)


def _trap_weights(x):
    dx = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def surface_sobolev_proxy(state: FlowState):
    """Squared ``H^{5/2}`` proxy of the displacement on the reference surface."""
    x = state.domain.reference_surface[:, 0]
    d = state.d
    d1 = np.gradient(d, x, edge_order=2)
    d2 = np.gradient(d1, x, edge_order=2)
    w = _trap_weights(x)
    return float(w @ (d**2 + d1**2 + d2**2) + slobodeckij_seminorm(x, d2, 0.5, w))


def velocity_sobolev_proxy(state: FlowState):
    """Squared ``H^{3/2}`` proxy: ``H^1`` norm plus the ``H^{1/2}`` seminorm of the surface trace of ``grad v``."""
    s = _snap(state)
    m = s.mesh
    integer = m.integrate(np.sum(s.v**2, axis=-1) + np.sum(s.G**2, axis=(-1, -2)))
    pts = m.surface_points
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    Gs = s.trace(s.G).reshape(len(pts), -1)
    return float(integer + slobodeckij_seminorm(arc, Gs, 0.5))


# --------------------------------------------------------------- functionals
@dataclass(frozen=True)
class EnergyLow:
    grad_J_perp: float
    hodge_DtJ: float
    surface_h52: float
    velocity_h32: float

    @property
    def total(self):
        return self.grad_J_perp + self.hodge_DtJ + self.surface_h52 + self.velocity_h32

    @property
    def lower(self):
        return self.surface_h52 + self.velocity_h32


def _DtJ(history, k, dt):
    snaps = [_snap(s) for s in history]
    return _material(snaps, k, [s.J for s in snaps], dt)


def energy_low(history, k=None) -> EnergyLow:
    """Components of ``E``: ``|grad_tau J_perp|^2`` on the surface, ``|D_t J + grad P_Jv|^2``, proxies."""
    history = list(history) if isinstance(history, (list, tuple)) else [history]
    _need(history, 2)
    k = len(history) // 2 if k is None else k
    dt = _history_dt(history)
    s = _snap(history[k])
    m = s.mesh
    gJ = float(m.surface_weights @ s.dtau_J_perp**2)
    hodge = _DtJ(history, k, dt) + m.grad(s.P_Jv)
    DJ = float(m.integrate(np.sum(hodge**2, axis=-1)))
    return EnergyLow(gJ, DJ, surface_sobolev_proxy(history[k]), velocity_sobolev_proxy(history[k]))


def energy_variant(history, k=None):
    """Overview form ``|D_t J|^2 + |J . n|^2_{H^1(Gamma)}``, reported alongside ``E``."""
    history = list(history)
    _need(history, 2)
    k = len(history) // 2 if k is None else k
    dt = _history_dt(history)
    s = _snap(history[k])
    m = s.mesh
    DJ = _DtJ(history, k, dt)
    w = m.surface_weights
    return float(m.integrate(np.sum(DJ**2, axis=-1)) + w @ s.J_perp**2 + w @ m.d_tau(s.J_perp) ** 2)


def _corner_values(s: Snapshot, field):
    om_l, om_r = s.angles
    return ((np.sin(om_l) * field[0]) ** 2, (np.sin(om_r) * field[-1]) ** 2)


def dissipation(state: FlowState):
    """``F = sum_i |sin(omega_i) grad_tau J_perp|^2`` at the contact points."""
    s = _snap(state)
    return float(sum(_corner_values(s, s.dtau_J_perp)))


def energy_high(history, k=None):
    """``(E_1, F_1)`` from ``D_t J`` and ``D_t^2 J``; needs three equally spaced states."""
    history = list(history)
    _need(history, 3)
    k = len(history) // 2 if k is None else k
    dt = _history_dt(history)
    snaps = [_snap(s) for s in history]
    DJ = [_material(snaps, j, [s.J for s in snaps], dt) for j in range(len(snaps))]
    D2J = _material(snaps, k, DJ, dt)
    s = snaps[k]
    m = s.mesh
    grad_perp = _dot(m.d_tau(DJ[k][:, m.N]), s.n)
    E1 = float(m.surface_weights @ grad_perp**2 + m.integrate(np.sum(D2J**2, axis=-1)))
    F1 = float(sum(_corner_values(s, grad_perp)))
    return E1, F1


def taylor_sign(state: FlowState, pressure=None):
    """Minimum over the surface nodes of ``-dP/dn``.

    The default pressure is the full split ``K_H + P_vv + H(g z) - g z``; a grid
    ``pressure`` may be supplied instead.
    """
    st = state.stage
    m = st.mesh
    if pressure is not None:
        P = np.asarray(getattr(pressure, "values", pressure), float)
        dn = _dot(m.grad(P)[:, m.N], m.surface_normal)
        return float(np.min(-dn))
    solver = solver_for(m)
    g = state.physics.g
    dn = solver.dtn(st.K) + st.C_vv + st.gz_flux - g * m.surface_normal[:, 1]
    return float(np.min(-dn))


# --------------------------------------------------------- identity residuals
def j_equation_residual(history, sign=1.0, return_terms=False, forcing=None):
    """Residual of the second-order equation for ``J`` at the middle of three states.

    Left side ``D_t[D_t J + grad P_Jv + s grad H(D_t P_vv - v . grad P_vv|_c)] + sigma A J``,
    right side ``R_0 + D_t grad P_Jv - s D_t grad H(v . grad P_vv|_c)`` with ``R_0``
    assembled from ``A_1, A_2, A_3``, ``R_1`` and the commutator ``[D_t, grad H]``.
    ``sign`` is ``s``; the value ``+1`` follows from ``D_t^2 K = sigma D_t^2 kappa - D_t^2 P_vv``.

    ``forcing`` gives, per state, the surface mismatch ``f = K + P_vv - sigma kappa`` of a
    prescribed flow; its contribution ``grad H(D_t^2 f)`` is added to the right side.
    """
    history = list(history)
    _need(history, 3)
    dt = _history_dt(history)
    snaps = [_snap(s) for s in history]
    k = len(snaps) // 2
    s = snaps[k]
    m = s.mesh
    sigma = s.phys.sigma
    N = m.N

    DJ = [_material(snaps, j, [q.J for q in snaps], dt) for j in range(len(snaps))]
    DP = [_material(snaps, j, [q.P for q in snaps], dt) for j in range(len(snaps))]
    vpc = [_dot(q.v, q.corner_grad_P) for q in snaps]
    X = [
        DJ[j] + q.mesh.grad(q.P_Jv) + sign * q.grad_H(q.trace(DP[j] - vpc[j]))
        for j, q in enumerate(snaps)
    ]
    lhs = _material(snaps, k, X, dt) + sigma * s.grad_H(-m.laplace_beltrami(s.J_perp))

    # R_1 on the surface
    vs = s.trace(s.v)
    dv = m.d_tau(vs)
    n, tau = s.n, s.tau
    lam = _dot(dv, tau)
    Dn = dt_normal(m, s.v)
    Pi = m.d_tau(n)
    DPi = m.d_tau(Dn) - lam[:, None] * Pi
    lap_v = m.laplace_beltrami(vs)
    comm_lb = np.stack([commutator_dt_laplace_beltrami(m, s.v, vs[:, a]) for a in range(2)], axis=-1)
    dgP = m.d_tau(s.trace(s.grad_P))
    R1 = (
        -_dot(comm_lb, n)
        - _dot(lap_v, Dn)
        + 2 * _dot(Pi, dgP)
        + 2 * lam * _dot(Pi, dv)
        - 2 * _dot(DPi, dv)
    )
    J_s = s.trace(s.J)
    term_J = -sigma * s.grad_H(_dot(J_s, m.laplace_beltrami(n)))
    term_P = sigma * s.grad_H(_dot(n, m.laplace_beltrami(s.trace(s.grad_P))))
    term_R1 = sigma * s.grad_H(R1)

    Y = DJ[k] - m.grad(s.w_A2) + _matvec_T(s.G, s.J)
    A1 = m.grad(s.solver.inv_laplace(*_commutator_data(s, Y)))
    Dw = _material(snaps, k, [q.w_A2 for q in snaps], dt)
    A2 = m.grad(Dw)
    GT = np.swapaxes(s.G, -1, -2)
    GDv = m.grad(s.Dt_v)
    A3 = (
        -2 * _matvec_T(s.G, DJ[k])
        - _matvec_T(GDv, s.J)
        - np.einsum("...ab,...b->...a", GT @ GT, s.J)
        + np.einsum("...ab,...b->...a", GT @ s.G, s.J)
    )
    f = s.trace(DP[k])
    Hf = s.grad_H(f)
    comm = m.grad(s.solver.inv_laplace(*_commutator_data(s, Hf))) - _matvec_T(s.G, Hf)
    R0 = term_J + term_P + term_R1 + A1 + A2 + A3 + comm

    DgPJ = _material(snaps, k, [q.mesh.grad(q.P_Jv) for q in snaps], dt)
    DgHc = _material(snaps, k, [q.grad_H(q.trace(vpc[j])) for j, q in enumerate(snaps)], dt)
    rhs = R0 + DgPJ - sign * DgHc
    if forcing is not None:
        Df = [_surface_material(snaps, j, forcing, dt) for j in range(len(snaps))]
        rhs = rhs + s.grad_H(_surface_material(snaps, k, Df, dt))
    res = lhs - rhs
    norm = float(np.sqrt(m.integrate(np.sum(res**2, axis=-1))))
    scale = float(np.sqrt(m.integrate(np.sum(lhs**2, axis=-1))) + np.sqrt(m.integrate(np.sum(rhs**2, axis=-1))))
    out = {"residual": norm, "relative": norm / scale if scale > 0 else 0.0, "scale": scale}
    if return_terms:
        out["field"] = res
        out["lhs"] = lhs
        out["rhs"] = rhs
    return out


def contact_relation_residual(history, slip_defect=None):
    """Defects of the contact-point relations for ``D_t J`` at the middle of three states.

    Along the wall ``D_t J . tau_b = eps_i (sigma/beta_c)(n . tau_b)(grad_tau J . n) + r_c``
    (``eps_l = -1``, ``eps_r = +1``), normal to it ``D_t J . n_b = -J . D_t n_b``, and at the
    contact points ``(D_t J . n)(grad_tau J . n) = -/+ (sigma/beta_c) F_i + R_c2``.

    ``slip_defect`` gives, per state, the pair ``v . tau_b - (slip law value)`` at the two
    contact points of a prescribed flow; ``-D_t^2`` of it enters ``D_t J . tau_b``.
    """
    history = list(history)
    _need(history, 3)
    dt = _history_dt(history)
    snaps = [_snap(s) for s in history]
    k = len(snaps) // 2
    s = snaps[k]
    m = s.mesh
    phys = s.phys
    coef = phys.sigma / phys.beta_c
    DJ = _material(snaps, k, [q.J for q in snaps], dt)
    DgP = _material(snaps, k, [q.grad_P for q in snaps], dt)
    vs = s.trace(s.v)
    dv = m.d_tau(vs)
    n, tau = s.n, s.tau
    lam = _dot(dv, tau)
    Dn = dt_normal(m, s.v)
    dn = m.d_tau(n)
    gP = s.trace(s.grad_P)
    gJ = s.dtau_J_perp
    extra = np.zeros(2)
    if slip_defect is not None:
        sd = np.asarray(slip_defect, float)
        if len(sd) == 3:
            extra = -(sd[2] - 2 * sd[1] + sd[0]) / dt**2
        else:
            extra = -np.gradient(np.gradient(sd, dt, axis=0, edge_order=2), dt, axis=0, edge_order=2)[k]
    out = {}
    for side, i, eps, tau_b in (("l", 0, -1.0, s.tau_b[0]), ("r", m.M, 1.0, s.tau_b[1])):
        ex = float(extra[0 if side == "l" else 1])
        n_b = np.array([tau_b[1], -tau_b[0]])
        ntb = float(n[i] @ tau_b)
        dvn = float(dv[i] @ n[i])
        inner = float(gP[i] @ dn[i]) + float(-lam[i] * dvn) + float(dv[i] @ Dn[i])
        r_c = -eps * coef * (ntb * inner + dvn * float(tau_b @ Dn[i])) - float(DgP[i, m.N] @ tau_b) + ex
        lhs1 = float(DJ[i, m.N] @ tau_b)
        rhs1 = eps * coef * ntb * gJ[i] + r_c
        lhs_nb = float(DJ[i, m.N] @ n_b)
        rhs_nb = 0.0  # straight walls: D_t n_b = 0
        DJ_perp = float(DJ[i, m.N] @ n[i])
        F_i = (abs(ntb) * gJ[i]) ** 2  # |n . tau_b| = sin(omega_i)
        sgn = -1.0 if side == "l" else 1.0
        R_c2 = (r_c * ntb + lhs_nb * float(n_b @ n[i])) * gJ[i]
        lhs2 = DJ_perp * gJ[i]
        rhs2 = sgn * coef * F_i + R_c2
        scale1 = abs(lhs1) + abs(eps * coef * ntb * gJ[i]) + abs(r_c)
        scale2 = abs(lhs2) + coef * F_i + abs(R_c2)
        out[side] = {
            "wall": lhs1 - rhs1,
            "wall_relative": (lhs1 - rhs1) / scale1 if scale1 > 0 else 0.0,
            "normal": lhs_nb - rhs_nb,
            "product": lhs2 - rhs2,
            "product_relative": (lhs2 - rhs2) / scale2 if scale2 > 0 else 0.0,
            "F": F_i,
            "F_term": sgn * coef * F_i,
        }
    return out


# -------------------------------------------------------------- energy law
def physical_energy(state: FlowState):
    """``1/2 int |v|^2 + g int z + sigma |Gamma| - sigma cos(omega_s) * wetted wall length``."""
    st = state.stage
    m = st.mesh
    phys = state.physics
    dom = state.domain
    z = m.nodes[..., 1]
    kinetic = 0.5 * m.integrate(np.sum(st.v**2, axis=-1))
    potential = phys.g * m.integrate(z)
    wet = dom.wall_length[0] + state.d[0] + dom.wall_length[1] + state.d[-1]
    return float(kinetic + potential + phys.sigma * m.surface_length - phys.sigma * np.cos(phys.omega_s) * wet)


def physical_energy_law(history, k=None):
    """Residual of ``dE/dt = -beta_c (v_l^2 + v_r^2)`` from the energies of the history."""
    history = list(history)
    _need(history, 2)
    dt = _history_dt(history)
    E = np.array([physical_energy(s) for s in history])
    n = len(history)
    k = n // 2 if k is None else k
    if n == 2:
        dE = (E[1] - E[0]) / dt
        diss = 0.5 * sum(s.physics.beta_c * (s.rate[0] ** 2 + s.rate[-1] ** 2) for s in history)
    else:
        dE = float(np.gradient(E, dt, edge_order=2)[k])
        s = history[k]
        diss = s.physics.beta_c * (s.rate[0] ** 2 + s.rate[-1] ** 2)
    res = dE + diss
    return {
        "energy": E,
        "dE_dt": float(dE),
        "dissipation": float(diss),
        "residual": float(res),
        "relative": float(abs(res) / abs(dE)) if dE != 0 else 0.0,
    }


def derive_energy_law():
    """Symbolic derivation of the contact-line energy law; returns the checked identities.

    1. first variation of length for a curve ``X(s, t)``:
       ``d_t |X_s| = d_s(-X_t . tau) + kappa (X_t . n) |X_s|`` with ``tau = -X_s/|X_s|``,
       ``n = (tau_z, -tau_x)`` and ``kappa = -(x_s z_ss - z_s x_ss)/|X_s|^3``;
    2. the kinetic energy loses ``int (sigma kappa + g z) v.n`` and the potential energy gains
       ``int g z v.n``, so the bulk terms cancel against the length variation;
    3. a contact point moving up its wall at speed ``V`` contributes ``V cos(omega)`` to
       ``d|Gamma|/dt`` and ``V`` to the wetted length, and the slip law gives
       ``sigma (cos omega - cos omega_s) V = -beta_c V^2``.
    """
    import sympy as sp

    s, t = sp.symbols("s t", real=True)
    x = sp.Function("x")(s, t)
    z = sp.Function("z")(s, t)
    xs, zs = sp.diff(x, s), sp.diff(z, s)
    speed = sp.sqrt(xs**2 + zs**2)
    tau = sp.Matrix([-xs, -zs]) / speed
    n = sp.Matrix([tau[1], -tau[0]])
    kappa = -(xs * sp.diff(z, s, 2) - zs * sp.diff(x, s, 2)) / speed**3
    Xt = sp.Matrix([sp.diff(x, t), sp.diff(z, t)])
    lhs = sp.diff(speed, t)
    rhs = sp.diff(-(Xt.dot(tau)), s) + kappa * Xt.dot(n) * speed
    length_ok = sp.simplify(lhs - rhs) == 0

    sigma, g, beta, V, om, oms, kv, zv = sp.symbols("sigma g beta_c V omega omega_s kappa z_v", real=True)
    Vn = sp.Symbol("V_n", real=True)
    bulk = -(sigma * kv + g * zv) * Vn + g * zv * Vn + sigma * kv * Vn
    bulk_ok = sp.simplify(bulk) == 0

    # endpoint: wall direction up at angle a, surface leaving the contact point at angle a + pi - omega
    a = sp.Symbol("a", real=True)
    up = sp.Matrix([sp.cos(a), sp.sin(a)])
    e_surf = sp.Matrix([sp.cos(a + sp.pi - om), sp.sin(a + sp.pi - om)])
    end_rate = -(V * up).dot(e_surf)  # length change when the endpoint moves along the wall
    end_ok = sp.simplify(end_rate - V * sp.cos(om)) == 0
    contact = sigma * end_rate - sigma * sp.cos(oms) * V
    slip = sp.Eq(beta * V, sigma * (sp.cos(oms) - sp.cos(om)))
    V_sol = sp.solve(slip, V)[0]
    law = sp.simplify(contact.subs(V, V_sol) + beta * V_sol**2)
    return {
        "length_variation": bool(length_ok),
        "bulk_cancellation": bool(bulk_ok),
        "endpoint_rate": bool(end_ok),
        "contact_dissipation": law == 0,
        "law": "dE/dt = -beta_c (v_l**2 + v_r**2)",
    }


# ------------------------------------------------------------------ report
@dataclass(frozen=True)
class EnergyReport:
    t: float
    E_grad_J: float
    E_hodge: float
    E_surface: float
    E_velocity: float
    E: float
    E_variant: float
    F: float
    E1: float
    F1: float
    taylor_min: float
    phys_energy: float
    phys_law_residual: float
    j_residual: float
    contact_residual_l: float
    contact_residual_r: float
    omega_l: float
    omega_r: float
    v_l: float
    v_r: float
    area: float

    def __post_init__(self):
        bad = [k for k, v in asdict(self).items() if not np.isfinite(v)]
        if bad:
            raise ValueError(f"non-finite report entries: {bad}")
        if self.F < 0 or self.F1 < 0:
            raise ValueError("dissipation must be non-negative")

    @classmethod
    def columns(cls):
        return [f for f in cls.__dataclass_fields__]

    def row(self):
        return [getattr(self, f) for f in self.columns()]


def energy_report(history, k=None, identities=True) -> EnergyReport:
    """Full diagnostic row for ``history[k]``; identity residuals need three states."""
    history = list(history)
    _need(history, 2)
    k = len(history) // 2 if k is None else k
    state = history[k]
    low = energy_low(history, k)
    variant = energy_variant(history, k)
    if len(history) >= 3:
        E1, F1 = energy_high(history, k)
    else:
        E1 = F1 = 0.0
    law = physical_energy_law(history, k)
    jr, cl, cr = 0.0, 0.0, 0.0
    if identities and len(history) >= 3:
        win = history[max(0, k - 1): k + 2] if 0 < k < len(history) - 1 else history[:3]
        jr = j_equation_residual(win)["relative"]
        cc = contact_relation_residual(win)
        cl, cr = cc["l"]["wall_relative"], cc["r"]["wall_relative"]
    fr = state.stage.frame
    dom = state.domain
    area = fluid_area(dom, dom.reference_surface + state.d[:, None] * dom.mu)
    return EnergyReport(
        state.time, low.grad_J_perp, low.hodge_DtJ, low.surface_h52, low.velocity_h32, low.total,
        variant, dissipation(state), E1, F1, taylor_sign(state), physical_energy(state),
        law["residual"], jr, cl, cr, fr.omega_l, fr.omega_r,
        float(state.rate[0]), float(state.rate[-1]), float(area),
    )
