"""Time evolution of the free surface with moving contact points.

The unknowns are the surface displacement ``d`` along ``mu`` and its rate ``q = d_t``
on the reference surface nodes.  Differentiating the kinematic condition
``q mu.n = v.n`` in time at a fixed reference label gives

    q_t mu.n = a.n + ((w - v).tau) (n . d_tau v + n . d_tau w),     w = q mu,

where ``a = D_t v`` is the Euler acceleration.  With the pressure split into the
harmonic extension of ``sigma kappa - P_vv``, the Neumann pressure ``P_vv`` and the
hydrostatic correction ``H(g z) - g z``,

    a.n = -N(sigma kappa - P_vv + g z) - C_vv.

Two discrete constraints close the system: the contact points move by the slip law
(enforced at the acceleration level through corner pressure values at the contact
nodes) and the fluid area is conserved (enforced through the surface flux constant).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .elliptic import solver_for
from .errors import CFLError, ConvergenceError
from .fieldops import PressureBundle, frak_j, pressure_vv
from .geometry import CornerDomain, SurfaceState, snapshot
from .mesh import GridField, _d_index

__all__ = [
    "Physics",
    "FlowState",
    "Stage",
    "evaluate",
    "recover_velocity",
    "euler_rhs",
    "contact_rhs",
    "contact_ode_rhs",
    "step",
    "picard_refine",
    "check_compatibility",
    "cfl_limit",
    "initial_state",
    "PicardReport",
]


@dataclass(frozen=True)
class Physics:
    sigma: float = 1.0
    beta_c: float = 1.0
    g: float = 1.0
    omega_s: float = 0.45 * np.pi
    a: float | None = None
    c_cfl: float = 0.3

    def __post_init__(self):
        if self.sigma <= 0 or self.beta_c <= 0 or self.g < 0:
            raise ValueError("sigma and beta_c must be positive, g non-negative")
        if not 0 < self.omega_s < np.pi:
            raise ValueError("stationary angle must lie in (0, pi)")

    def shift(self, depth):
        return 10 * self.sigma / depth**2 if self.a is None else self.a

    def slip(self, omega):
        return self.sigma / self.beta_c * (np.cos(self.omega_s) - np.cos(omega))


# --------------------------------------------------------------------- area
def _rot(a):
    return np.stack([-a[..., 1], a[..., 0]], axis=-1)


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def fluid_area(domain: CornerDomain, X):
    """Polygon area bounded by the surface nodes and the straight walls and floor."""
    bl, br = domain.b_left, domain.b_right
    return 0.5 * (
        _cross(bl, br) + _cross(br, X[-1]) + np.sum(_cross(X[1:], X[:-1])) + _cross(X[0], bl)
    )


def area_gradient(domain: CornerDomain, X):
    """``dA/dX_i`` for every surface node."""
    G = np.zeros_like(X)
    G[-1] += 0.5 * _rot(domain.b_right)
    G[1:] += -0.5 * _rot(X[:-1])
    G[:-1] += 0.5 * _rot(X[1:])
    G[0] += -0.5 * _rot(domain.b_left)
    return G


def _angle_rate(X, W, down):
    """Angle between the one-sided surface tangent and ``down``, and its rate of change."""
    e = -3 * X[0] + 4 * X[1] - X[2]
    de = -3 * W[0] + 4 * W[1] - W[2]
    omega = float(np.arctan2(abs(_cross(e, down)), e @ down))
    sgn = np.sign(_cross(down, e))
    return omega, float(sgn * _cross(e, de) / (e @ e))


# -------------------------------------------------------------------- state
@dataclass(frozen=True)
class FlowState:
    domain: CornerDomain
    surface: SurfaceState
    rate: np.ndarray
    physics: Physics
    history: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        r = np.array(self.rate, float)
        r.setflags(write=False)
        object.__setattr__(self, "rate", r)

    @property
    def time(self):
        return self.surface.time

    @property
    def d(self):
        return self.surface.displacement

    @cached_property
    def stage(self) -> "Stage":
        return evaluate(self.domain, self.physics, self.d, self.rate)

    def with_values(self, d, q, time):
        surf = SurfaceState(d, float(d[0]), float(d[-1]), float(q[0]), float(q[-1]), float(time))
        return FlowState(self.domain, surf, q, self.physics)


@dataclass
class Stage:
    """Everything derived from ``(d, q)`` at one instant."""

    frame: object
    mesh: object
    phi: np.ndarray
    v: np.ndarray
    xi: float
    P_vv: np.ndarray
    C_vv: float
    K: np.ndarray
    gz_flux: np.ndarray
    a_n: np.ndarray
    transport: np.ndarray
    qdot_free: np.ndarray
    qdot: np.ndarray
    corner_pressure: tuple
    flux_shift: float
    slip_target: tuple
    omega_dot: tuple
    gravity_field: np.ndarray = field(repr=False)

    @cached_property
    def bundle(self) -> PressureBundle:
        K_H, J = frak_j(self.mesh, self.K)
        return PressureBundle(GridField(self.P_vv, self.mesh.stamp), self.C_vv, self.K, K_H, J)

    @property
    def velocity(self):
        return GridField(self.v, self.mesh.stamp, "velocity")


def recover_velocity(mesh, mu, q):
    """Potential flow with surface flux ``q mu.n``, no bottom flux and uniform divergence."""
    n = mesh.surface_normal
    f = q * np.einsum("ia,ia->i", mu, n)
    xi = float(mesh.surface_weights @ f)
    h = np.full(mesh.shape, xi / mesh.area)
    phi = solver_for(mesh).nbvp(h, f, None)
    return phi, mesh.grad(phi), xi


def evaluate(domain: CornerDomain, phys: Physics, d, q, constrain=True) -> Stage:
    d = np.asarray(d, float)
    q = np.asarray(q, float)
    surf = SurfaceState.from_displacement(d)
    frame, mesh = snapshot(domain, surf)
    frame.require_acute()
    solver = solver_for(mesh)
    N = mesh.N
    mu = domain.mu
    tau, n = mesh.surface_tangent, mesh.surface_normal
    mun = np.einsum("ia,ia->i", mu, n)
    if np.min(mun) < domain.c0:
        from .errors import GeometryError

        raise GeometryError(f"mu.n dropped to {np.min(mun):.4g}, below c0 = {domain.c0}")

    phi, v, xi = recover_velocity(mesh, mu, q)
    P_vv, C_vv = pressure_vv(mesh, v)
    P_vv = P_vv.values
    kappa = mesh.curvature
    K = phys.sigma * kappa - P_vv[:, N]
    z = mesh.surface_points[:, 1]
    gz_ext = solver.harmonic_extension(phys.g * z)
    gz_flux = solver.surface_flux(gz_ext)
    a_n = -solver.dtn(K) - gz_flux - C_vv

    w = q[:, None] * mu
    vs = v[:, N]
    rel = np.einsum("ia,ia->i", w - vs, tau)
    dv = mesh.d_tau(vs)
    dw = mesh.d_tau(w)
    transport = rel * (np.einsum("ia,ia->i", dv, n) + np.einsum("ia,ia->i", dw, n))
    qdot_free = (a_n + transport) / mun

    X = mesh.surface_points
    om_l, omd_l = _angle_rate(X, w, -domain.up_left)
    om_r, omd_r = _angle_rate(X[::-1], w[::-1], -domain.up_right)
    coef = phys.sigma / phys.beta_c
    target = (coef * np.sin(om_l) * omd_l, coef * np.sin(om_r) * omd_r)

    qdot = qdot_free
    corner = (0.0, 0.0)
    shift = 0.0
    if constrain:
        m = mesh.M
        e = np.zeros((m + 1, 2))
        e[0, 0] = e[m, 1] = 1.0
        resp = -solver.dtn(e) / mun[:, None]  # response of q_t to corner pressure values
        ones = 1.0 / mun
        G = area_gradient(domain, X)
        gmu = np.einsum("ia,ia->i", G, mu)
        quad = np.sum(_cross(w[1:], w[:-1]))
        A = np.array([
            [resp[0, 0], resp[0, 1], ones[0]],
            [resp[m, 0], resp[m, 1], ones[m]],
            [gmu @ resp[:, 0], gmu @ resp[:, 1], gmu @ ones],
        ])
        b = np.array([target[0] - qdot_free[0], target[1] - qdot_free[m], -quad - gmu @ qdot_free])
        x = np.linalg.solve(A, b)
        qdot = qdot_free + resp @ x[:2] + x[2] * ones
        corner = (float(x[0]), float(x[1]))
        shift = float(x[2])

    st = Stage(
        frame, mesh, phi, v, xi, P_vv, C_vv, K, gz_flux, a_n, transport, qdot_free, qdot,
        corner, shift, target, (omd_l, omd_r), mesh.grad(gz_ext),
    )
    return st


def euler_rhs(state: FlowState, hydrostatic_correction=True):
    """``D_t v = -J - grad P_vv - grad H(g z)``.

    Without the correction the bare split gives ``-J - grad P_vv - g e_z``.
    """
    st = state.stage
    b = st.bundle
    grad_P = st.mesh.grad(st.P_vv)
    if hydrostatic_correction:
        grav = st.gravity_field
    else:
        grav = np.zeros_like(grad_P)
        grav[..., 1] = state.physics.g
    return GridField(-b.J.values - grad_P - grav, st.mesh.stamp, "acceleration")


def contact_rhs(state: FlowState):
    """Slip velocities ``(sigma/beta_c)(cos omega_s - cos omega_i)``, positive up the wall."""
    fr = state.stage.frame
    return state.physics.slip(fr.omega_l), state.physics.slip(fr.omega_r)


def contact_ode_rhs(state: FlowState):
    """Contact-point accelerations assembled from the frozen quantities at the contact nodes.

    ``-(1/mu.n) (mu.n grad_{v*} q + grad_{v*} mu . n q + N K_a - sigma a N d
    + grad P_vv . n + N(g z))`` with ``v*`` the relative tangential velocity.
    """
    st = state.stage
    mesh = st.mesh
    dom = state.domain
    solver = solver_for(mesh)
    phys = state.physics
    a = phys.shift(dom.depth)
    q = state.rate
    N = mesh.N
    tau, n = mesh.surface_tangent, mesh.surface_normal
    mun = np.einsum("ia,ia->i", dom.mu, n)
    rel = np.einsum("ia,ia->i", st.v[:, N] - q[:, None] * dom.mu, tau)
    dq = mesh.d_tau(q)
    dmu_n = np.einsum("ia,ia->i", mesh.d_tau(dom.mu), n)
    K = st.K.copy()
    K[0] += st.corner_pressure[0]
    K[-1] += st.corner_pressure[1]
    K_a = K + phys.sigma * a * state.d
    term = (
        mun * rel * dq
        + rel * dmu_n * q
        + solver.dtn(K_a)
        - phys.sigma * a * solver.dtn(state.d)
        + st.C_vv
        - st.flux_shift
        + st.gz_flux
    )
    B = -term / mun
    return float(B[0]), float(B[-1])


def cfl_limit(state: FlowState):
    """Capillary bound ``c_cfl h^{3/2} / sqrt(sigma)`` with ``h`` the smallest reference surface spacing."""
    ds = np.min(np.linalg.norm(np.diff(state.domain.reference_surface, axis=0), axis=1))
    return state.physics.c_cfl * ds**1.5 / np.sqrt(state.physics.sigma)


# ---------------------------------------------------------------- stepping
def _project(domain, phys, d, q, area0):
    """Re-impose the slip law at the contact nodes and the fluid area."""
    d = d.copy()
    q = q.copy()
    mu = domain.mu
    inner = slice(1, -1)
    for _ in range(2):
        X = domain.reference_surface + d[:, None] * mu
        G = np.einsum("ia,ia->i", area_gradient(domain, X), mu)
        err = fluid_area(domain, X) - area0
        d[inner] -= err / (G[inner] @ G[inner]) * G[inner]
    frame = snapshot_frame(domain, d)
    q[0] = phys.slip(frame[0])
    q[-1] = phys.slip(frame[1])
    X = domain.reference_surface + d[:, None] * mu
    G = np.einsum("ia,ia->i", area_gradient(domain, X), mu)
    rate = G @ q
    q[inner] -= rate / (G[inner] @ G[inner]) * G[inner]
    return d, q


def snapshot_frame(domain, d):
    from .geometry import contact_angles

    X = domain.reference_surface + d[:, None] * domain.mu
    return contact_angles(X, domain.up_left, domain.up_right)


def step(state: FlowState, dt) -> FlowState:
    """One classical RK4 step of ``(d, q)`` followed by the constraint projection."""
    lim = cfl_limit(state)
    if dt > lim * (1 + 1e-12):
        raise CFLError(f"dt = {dt:.4g} exceeds the capillary CFL bound {lim:.4g}")
    dom, phys = state.domain, state.physics
    area0 = fluid_area(dom, dom.reference_surface + state.d[:, None] * dom.mu) if not state.history else state.history[0]
    d0, q0 = state.d, state.rate

    def rhs(d, q, first=None):
        st = first if first is not None else evaluate(dom, phys, d, q)
        return q, st.qdot

    k1 = rhs(d0, q0, state.stage)
    k2 = rhs(d0 + 0.5 * dt * k1[0], q0 + 0.5 * dt * k1[1])
    k3 = rhs(d0 + 0.5 * dt * k2[0], q0 + 0.5 * dt * k2[1])
    k4 = rhs(d0 + dt * k3[0], q0 + dt * k3[1])
    d1 = d0 + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    q1 = q0 + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    d1, q1 = _project(dom, phys, d1, q1, area0)
    new = state.with_values(d1, q1, state.time + dt)
    return dataclasses.replace(new, history=(area0,))


# ------------------------------------------------------------------ Picard
@dataclass(frozen=True)
class PicardReport:
    iterations: int
    deltas: tuple
    contraction: tuple
    velocity_gap: tuple


def _surface_matrices(mesh, mun, sigma, a):
    n = mesh.M + 1
    speed = np.linalg.norm(_d_index(mesh.surface_points, 0), axis=1)
    D = -_d_index(np.eye(n), 0) / speed[:, None]
    lap = D @ D
    dtn = solver_for(mesh).dtn_matrix()
    S = sigma * dtn @ (a * np.eye(n) - lap) * mun[None, :] / mun[:, None]
    S[0] = S[-1] = 0.0
    return S


def _picard_norm(st_new, st_old, q_new, q_old, d_new, d_old, phys, a):
    Ja_new = solver_for(st_new.mesh).dtn(st_new.K + phys.sigma * a * d_new)
    Ja_old = solver_for(st_old.mesh).dtn(st_old.K + phys.sigma * a * d_old)
    parts = [
        np.max(np.abs(q_new - q_old)),
        np.max(np.abs(Ja_new - Ja_old)),
        np.max(np.abs(st_new.P_vv - st_old.P_vv)),
        abs(d_new[0] - d_old[0]),
        abs(d_new[-1] - d_old[-1]),
    ]
    return float(max(parts))


def picard_refine(state: FlowState, dt, tol=1e-10, max_iter=30, return_report=False):
    """Fixed-point iteration of one implicit Euler step with the capillary operator implicit.

    Iterate ``k`` freezes geometry, velocity and pressures; the principal part
    ``sigma N (a - Lap_Gamma)`` acts implicitly on the displacement increment.
    """
    dom, phys = state.domain, state.physics
    a = phys.shift(dom.depth)
    d_n, q_n = state.d, state.rate
    d_k, q_k = d_n.copy(), q_n.copy()
    st_k = state.stage
    deltas, gaps = [], []
    for it in range(1, max_iter + 1):
        mun = np.einsum("ia,ia->i", dom.mu, st_k.mesh.surface_normal)
        S = _surface_matrices(st_k.mesh, mun, phys.sigma, a)
        lhs = np.eye(len(q_n)) + dt * dt * S
        rhs = q_n + dt * st_k.qdot - dt * S @ (d_n - d_k)
        q_new = np.linalg.solve(lhs, rhs)
        d_new = d_n + dt * q_new
        st_new = evaluate(dom, phys, d_new, q_new)
        # velocity from the frozen Euler equation versus the potential recovery
        v_tilde = st_k.v + dt * (-st_k.bundle.J.values - st_k.mesh.grad(st_k.P_vv) - st_k.gravity_field)
        gaps.append(float(np.sqrt(st_new.mesh.integrate(np.sum((v_tilde - st_new.v) ** 2, axis=-1)))))
        delta = _picard_norm(st_new, st_k, q_new, q_k, d_new, d_k, phys, a)
        deltas.append(delta)
        d_k, q_k, st_k = d_new, q_new, st_new
        if delta < tol:
            break
    else:
        rates = ", ".join(f"{deltas[i + 1] / deltas[i]:.3g}" for i in range(len(deltas) - 1) if deltas[i] > 0)
        raise ConvergenceError(
            f"Picard iteration did not reach tol={tol:g} in {max_iter} iterations; contraction history [{rates}]",
            history=deltas,
        )
    area0 = state.history[0] if state.history else fluid_area(dom, dom.reference_surface + d_n[:, None] * dom.mu)
    d_k, q_k = _project(dom, phys, d_k, q_k, area0)
    new = dataclasses.replace(state.with_values(d_k, q_k, state.time + dt), history=(area0,))
    contraction = tuple(deltas[i + 1] / deltas[i] for i in range(len(deltas) - 1) if deltas[i] > 0)
    report = PicardReport(len(deltas), tuple(deltas), contraction, tuple(gaps))
    return (new, report) if return_report else new


# ----------------------------------------------------------- compatibility
def check_compatibility(state: FlowState, dt=None):
    """Residuals of the slip law (order 0) and of its time derivative (order 1) per contact point."""
    phys = state.physics
    fr = state.stage.frame
    vel = (float(state.rate[0]), float(state.rate[-1]))
    om = (fr.omega_l, fr.omega_r)
    r0 = tuple(phys.beta_c * vel[i] - phys.sigma * (np.cos(phys.omega_s) - np.cos(om[i])) for i in range(2))
    B = contact_ode_rhs(state)
    delta = 0.5 * (dt if dt is not None else cfl_limit(state))
    d_trial = state.d + delta * state.rate
    om_trial = snapshot_frame(state.domain, d_trial)
    r1 = tuple(
        phys.beta_c * B[i] - phys.sigma * (np.cos(om[i]) - np.cos(om_trial[i])) / delta for i in range(2)
    )
    return {"k0": r0, "k1": r1, "angles": om, "velocities": vel}


# ---------------------------------------------------------------- presets
def _smooth_ends(x, L, ell):
    s = x + L / 2
    return np.exp(-s / ell), np.exp(-(L - s) / ell)


def initial_state(domain: CornerDomain, physics: Physics, preset="flat", **params) -> FlowState:
    """Named initial conditions: ``flat``, ``standing_wave``, ``angle_relaxation``."""
    x = domain.reference_surface[:, 0]
    L = domain.width
    n = len(x)
    q = np.zeros(n)
    if preset == "flat":
        d = np.zeros(n)
    elif preset == "standing_wave":
        amp = params.get("amplitude", 0.01 * domain.depth)
        mode = params.get("mode", 2)
        d = amp * np.cos(mode * np.pi * (x + L / 2) / L)
    elif preset == "angle_relaxation":
        from scipy.optimize import brentq, fsolve

        omega0 = params["omega_0"]
        ell = params.get("width", 0.15 * L)
        el, er = _smooth_ends(x, L, ell)

        def angle_gap(c, side):
            prof = el if side == 0 else er
            return snapshot_frame(domain, c * prof)[side] - omega0

        # each end profile has a small tail at the far contact point: solve the pair jointly
        c0 = [brentq(angle_gap, -0.9 * domain.d0, 0.9 * domain.d0, args=(k,)) for k in (0, 1)]
        c = fsolve(lambda c: np.subtract(snapshot_frame(domain, c[0] * el + c[1] * er), omega0), c0, xtol=1e-13)
        d = c[0] * el + c[1] * er
        ang = snapshot_frame(domain, d)
        q = physics.slip(ang[0]) * el + physics.slip(ang[1]) * er
    else:
        raise ValueError(f"unknown initial condition preset {preset!r}")
    area0 = fluid_area(domain, domain.reference_surface + d[:, None] * domain.mu)
    if preset != "flat":
        d, q = _project(domain, physics, d, q, area0)
    surf = SurfaceState(d, float(d[0]), float(d[-1]), float(q[0]), float(q[-1]), 0.0)
    return FlowState(domain, surf, q, physics, history=(area0,))
