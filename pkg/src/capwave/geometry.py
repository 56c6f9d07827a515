"""Reference tank geometry, the moving free surface, and the domain maps.

The tank is a trapezoid whose walls lean outward, so the fluid meets each wall at an
acute angle.  At rest the free surface is the segment ``z = 0, |x| <= L/2`` and the
floor sits at ``z = -H``.  The free surface is described by a displacement ``d`` along
a fixed transport field ``mu`` on the reference surface, ``Phi(p) = p + d(p) mu(p)``,
and the fluid grid is obtained by harmonically extending the boundary motion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import AngleExitError, DiffeomorphismError, GeometryError, MeshFoldError, SelfIntersectionError
from .mesh import GridField, Mesh, curve_frame

__all__ = [
    "GeometryConfig",
    "CornerDomain",
    "SurfaceState",
    "SurfaceFrame",
    "build_reference_domain",
    "surface_from_displacement",
    "domain_map",
    "snapshot",
    "contact_angles",
    "graded",
]


@dataclass(frozen=True)
class GeometryConfig:
    width: float = 2.0
    depth: float = 1.0
    omega_left: float = 0.45 * np.pi
    omega_right: float = 0.45 * np.pi
    M: int = 32
    N: int = 16
    grading: float = 1.5
    mu_floor: float = 0.5
    corner_radius: float = 0.25


def grading_beta(ratio):
    """Blend weight of the clustered map giving middle/end spacing ``ratio``."""
    if ratio < 1:
        raise GeometryError("grading ratio must be >= 1")
    return (ratio - 1.0) / (ratio - 1.0 + np.pi / 2)


def graded(n, ratio, kind="both"):
    """Points on [0, 1]; ``both`` clusters at the two ends, ``top`` clusters at 1."""
    u = np.linspace(0.0, 1.0, n + 1)
    beta = grading_beta(ratio)
    if kind == "both":
        s = (1 - beta) * u + beta * 0.5 * (1 - np.cos(np.pi * u))
    elif kind == "top":
        s = (1 - beta) * u + beta * np.sin(0.5 * np.pi * u)
    else:
        raise ValueError(kind)
    s[0], s[-1] = 0.0, 1.0
    return s


class CornerDomain:
    """Fixed reference domain: trapezoidal tank at rest with its grid and transport field."""

    def __init__(self, cfg: GeometryConfig):
        self.cfg = cfg
        L, H = cfg.width, cfg.depth
        wl, wr = cfg.omega_left, cfg.omega_right
        self.width, self.depth = L, H
        self.omega_ref = (wl, wr)
        self.M, self.N = cfg.M, cfg.N
        self.c0 = cfg.mu_floor
        self.r0 = cfg.corner_radius

        self.p_left = np.array([-L / 2, 0.0])
        self.p_right = np.array([L / 2, 0.0])
        self.b_left = np.array([-L / 2 + H / np.tan(wl), -H])
        self.b_right = np.array([L / 2 - H / np.tan(wr), -H])
        # unit vectors pointing up each wall, towards the contact points
        self.up_left = (self.p_left - self.b_left) / np.linalg.norm(self.p_left - self.b_left)
        self.up_right = (self.p_right - self.b_right) / np.linalg.norm(self.p_right - self.b_right)
        self.wall_length = (
            float(np.linalg.norm(self.p_left - self.b_left)),
            float(np.linalg.norm(self.p_right - self.b_right)),
        )

        self.s_surface = graded(cfg.M, cfg.grading, "both")
        self.t_vertical = graded(cfg.N, cfg.grading, "top")
        s = self.s_surface[:, None, None]
        t = self.t_vertical[None, :, None]
        top = self.p_left + (self.p_right - self.p_left) * s
        bot = self.b_left + (self.b_right - self.b_left) * s
        self.nodes = (1 - t) * bot + t * top
        self.mesh = Mesh(self.nodes)

        # transport field: angle interpolated quadratically between the wall directions
        theta = self.mu_angle(self.s_surface)
        self.mu = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        self.mu[0], self.mu[-1] = self.up_left, self.up_right
        self.mu_dot_n = self.mu @ np.array([0.0, 1.0])
        self.mu_slope = float(np.max(np.abs(self._theta_prime(self.s_surface)))) / L
        feature = min(H, *self.wall_length)
        self.d0 = 0.5 * min(feature, self.c0 / self.mu_slope if self.mu_slope > 0 else np.inf)

    def mu_angle(self, s):
        wl, wr = self.omega_ref
        y0, y1, y2 = np.pi - wl, np.pi / 2, wr
        return y0 * 2 * (s - 0.5) * (s - 1) - y1 * 4 * s * (s - 1) + y2 * 2 * s * (s - 0.5)

    def _theta_prime(self, s):
        wl, wr = self.omega_ref
        y0, y1, y2 = np.pi - wl, np.pi / 2, wr
        return y0 * (4 * s - 3) - y1 * (8 * s - 4) + y2 * (4 * s - 1)

    @property
    def reference_surface(self):
        return self.nodes[:, -1]

    @property
    def bottom_nodes(self):
        return self.mesh.bottom_points

    @property
    def contact_points(self):
        return self.p_left.copy(), self.p_right.copy()

    @cached_property
    def _extension(self):
        """Factorised reference Laplacian with Dirichlet data on the whole boundary."""
        K = self.mesh.stiffness.tocsc()
        inner = self.mesh.interior_index
        bnd = self.mesh.boundary_index
        lu = spla.splu(K[inner][:, inner].tocsc())
        return lu, K[inner][:, bnd], inner, bnd

    def boundary_motion(self, d):
        """Displacement of every boundary node: surface along mu, walls stretched, floor fixed."""
        d = np.asarray(d, float)
        disp = np.zeros(self.nodes.shape)
        disp[:, -1] = d[:, None] * self.mu
        t = self.t_vertical[:, None]
        disp[0, :] = t * d[0] * self.up_left
        disp[-1, :] = t * d[-1] * self.up_right
        return disp

    def extend(self, boundary_disp):
        lu, K_ib, inner, bnd = self._extension
        flat = boundary_disp.reshape(-1, 2)
        out = flat.copy()
        out[inner] = lu.solve(-(K_ib @ flat[bnd]))
        return out.reshape(boundary_disp.shape)


def build_reference_domain(cfg: GeometryConfig) -> CornerDomain:
    if cfg.width <= 0 or cfg.depth <= 0:
        raise GeometryError("tank width and depth must be positive")
    for name, w in (("left", cfg.omega_left), ("right", cfg.omega_right)):
        if not 0 < w < np.pi / 2:
            raise GeometryError(f"{name} reference angle {w:.6g} is not acute")
    if cfg.M < 16 or cfg.N < 16:
        raise GeometryError(f"grid too coarse: M={cfg.M}, N={cfg.N}, need at least 16")
    floor = cfg.width - cfg.depth * (1 / np.tan(cfg.omega_left) + 1 / np.tan(cfg.omega_right))
    if floor <= 0:
        raise GeometryError("walls meet above the floor: increase width or the angles")
    if not 0 < cfg.mu_floor < 1:
        raise GeometryError("mu floor c0 must lie in (0, 1)")
    dom = CornerDomain(cfg)
    if np.min(dom.mu_dot_n) < cfg.mu_floor:
        raise GeometryError(
            f"mu floor c0={cfg.mu_floor} unattainable: min mu.n = {np.min(dom.mu_dot_n):.6g}"
        )
    if not 0 < cfg.corner_radius < min(dom.wall_length):
        raise GeometryError("corner radius must be positive and shorter than the walls")
    return dom


@dataclass(frozen=True)
class SurfaceState:
    displacement: np.ndarray
    d_l: float = 0.0
    d_r: float = 0.0
    d_l_dot: float = 0.0
    d_r_dot: float = 0.0
    time: float = 0.0

    def __post_init__(self):
        d = np.array(self.displacement, float)
        d.setflags(write=False)
        object.__setattr__(self, "displacement", d)
        if d[0] != self.d_l or d[-1] != self.d_r:
            raise GeometryError("contact values must equal the end values of the displacement")

    @classmethod
    def from_displacement(cls, d, d_l_dot=0.0, d_r_dot=0.0, time=0.0):
        d = np.asarray(d, float)
        return cls(d, float(d[0]), float(d[-1]), float(d_l_dot), float(d_r_dot), float(time))


@dataclass(frozen=True)
class SurfaceFrame:
    nodes: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    ds: np.ndarray
    curvature: np.ndarray
    omega_l: float
    omega_r: float
    mu_dot_n: np.ndarray = field(repr=False)

    @property
    def second_fundamental(self):
        return self.curvature

    @property
    def angles(self):
        return self.omega_l, self.omega_r

    def require_acute(self):
        for name, w in (("left", self.omega_l), ("right", self.omega_r)):
            if not 0 < w < np.pi / 2:
                raise AngleExitError(f"{name} contact angle {w:.6g} left (0, pi/2)")


def contact_angles(points, up_left, up_right):
    """Interior angles between the surface and the wall, one-sided 3-point tangents."""
    e_l = -3 * points[0] + 4 * points[1] - points[2]
    e_r = -3 * points[-1] + 4 * points[-2] - points[-3]

    def angle(a, b):
        return float(np.arctan2(abs(a[0] * b[1] - a[1] * b[0]), a @ b))

    return angle(e_l, -up_left), angle(e_r, -up_right)


def _segments_cross(p, q, a, b):
    """Proper intersection test for every pair of segments (p_k, q_k) and (a_m, b_m)."""

    def orient(u, v, w):
        return (v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1]) - (v[..., 1] - u[..., 1]) * (w[..., 0] - u[..., 0])

    P, Q = p[:, None], q[:, None]
    A, B = a[None], b[None]
    d1 = orient(A, B, P)
    d2 = orient(A, B, Q)
    d3 = orient(P, Q, A)
    d4 = orient(P, Q, B)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def check_simple(surface, bottom):
    s0, s1 = surface[:-1], surface[1:]
    hit = _segments_cross(s0, s1, s0, s1)
    k = np.arange(len(s0))
    hit &= np.abs(k[:, None] - k[None, :]) > 1
    if hit.any():
        raise SelfIntersectionError("free surface intersects itself")
    b0, b1 = bottom[:-1], bottom[1:]
    hit = _segments_cross(s0, s1, b0, b1)
    hit[0, 0] = hit[-1, -1] = False
    if hit.any():
        raise SelfIntersectionError("free surface crosses the bottom")


def surface_from_displacement(domain: CornerDomain, state: SurfaceState) -> SurfaceFrame:
    d = state.displacement
    if d.shape != (domain.M + 1,):
        raise GeometryError("displacement does not match the surface grid")
    dmax = float(np.max(np.abs(d)))
    if dmax > domain.d0:
        raise DiffeomorphismError(f"|d| = {dmax:.6g} exceeds the diffeomorphism radius {domain.d0:.6g}")
    nodes = domain.reference_surface + d[:, None] * domain.mu
    bottom = np.concatenate([
        (domain.b_left + np.outer(domain.t_vertical, (domain.wall_length[0] + d[0]) * domain.up_left))[::-1],
        [domain.b_right],
        domain.b_right + np.outer(domain.t_vertical, (domain.wall_length[1] + d[-1]) * domain.up_right)[1:],
    ])
    check_simple(nodes, bottom)
    tau, normal, kappa, _ = curve_frame(nodes)
    ds = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
    wl, wr = contact_angles(nodes, domain.up_left, domain.up_right)
    mdn = np.einsum("ia,ia->i", domain.mu, normal)
    return SurfaceFrame(nodes, tau, normal, ds, kappa, wl, wr, mdn)


def domain_map(domain: CornerDomain, state: SurfaceState) -> GridField:
    """Grid of the current fluid domain: reference nodes moved by the extended boundary motion."""
    nodes = domain.nodes + domain.extend(domain.boundary_motion(state.displacement))
    mesh = Mesh(nodes)
    jac = mesh.cell_jacobians()
    if np.min(jac) <= 0:
        raise MeshFoldError(f"mapped grid folds: min corner Jacobian {np.min(jac):.3g}")
    return GridField(nodes, mesh.stamp, "length")


def snapshot(domain: CornerDomain, state: SurfaceState):
    """Frame and finite-element mesh of the current fluid domain."""
    frame = surface_from_displacement(domain, state)
    nodes = domain_map(domain, state)
    return frame, Mesh(nodes.values)


def phi_inverse(domain: CornerDomain, state: SurfaceState, points):
    """Reference abscissae of points lying on the current surface."""
    xs = domain.reference_surface[:, 0]
    d = state.displacement
    spline = CubicSpline(xs, domain.reference_surface + d[:, None] * domain.mu, axis=0)
    out = []
    for X in np.atleast_2d(points):
        k = int(np.argmin(np.linalg.norm(spline(xs) - X, axis=1)))
        if np.allclose(spline(xs[k]), X, rtol=0, atol=1e-14):
            out.append(xs[k])
            continue
        lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, len(xs) - 1)]

        def g(x):
            return (spline(x) - X) @ spline(x, 1)

        out.append(brentq(g, lo, hi, xtol=1e-14))
    return np.array(out)


def rectangle_mesh(width, depth, M, N, grading=1.0):
    """Rectangular tank ``[-L/2, L/2] x [-H, 0]`` with the same node layout (used by oracles)."""
    s = graded(M, grading, "both")
    t = graded(N, grading, "top")
    x = -width / 2 + width * s
    z = -depth + depth * t
    return Mesh(np.stack(np.meshgrid(x, z, indexing="ij"), axis=-1))


def trapezoid_mesh(width, depth, omega_l, omega_r, M, N, grading=1.0):
    """Reference trapezoid grid without the transport-field checks (used by oracles)."""
    cfg = GeometryConfig(width, depth, omega_l, omega_r, M, N, grading, 1e-3, 1e-3)
    return CornerDomain(cfg).mesh
