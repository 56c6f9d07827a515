"""Boundary-fitted quadrilateral mesh of the fluid domain and the fields living on it.

Node ``(i, j)`` sits at ``nodes[i, j]``; ``i = 0..M`` runs along the free surface from
the left contact point to the right one, ``j = 0..N`` runs from the floor (``j = 0``)
to the free surface (``j = N``).  The bottom boundary is the left wall, the floor and
the right wall, traversed counterclockwise from ``p_l`` to ``p_r``.

Orientation conventions used everywhere in the package:

* tangents follow the counterclockwise traversal of the boundary, so on the free
  surface ``tau_t`` points from right to left;
* ``n = (tau_z, -tau_x)`` is the outward unit normal;
* curvature ``kappa = d(n)/ds . tau`` is positive where the surface bulges out of
  the fluid (a crest).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

__all__ = ["Mesh", "GridField", "BoundaryField", "StampMismatch", "curve_frame"]

# reference Q1 element: corner order (0,0), (1,0), (1,1), (0,1) in (i, j) offsets
_CORNERS = np.array([[0, 0], [1, 0], [1, 1], [0, 1]])
_GP = np.array([-1.0, 1.0]) / np.sqrt(3.0)


def _shape(a, b):
    n = 0.25 * np.array([(1 - a) * (1 - b), (1 + a) * (1 - b), (1 + a) * (1 + b), (1 - a) * (1 + b)])
    dn = 0.25 * np.array([
        [-(1 - b), -(1 - a)],
        [(1 - b), -(1 + a)],
        [(1 + b), (1 + a)],
        [-(1 + b), (1 - a)],
    ])
    return n, dn


_QUAD = [(_shape(a, b), 1.0) for a in _GP for b in _GP]


class StampMismatch(ValueError):
    """Two fields from different domain snapshots were combined."""


@dataclass(frozen=True)
class GridField:
    """Scalar ``(M+1, N+1)`` or vector ``(M+1, N+1, 2)`` nodal values on one snapshot."""

    values: np.ndarray
    stamp: str
    units: str = ""

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise FloatingPointError("GridField contains non-finite values")

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def _check(self, other):
        if isinstance(other, GridField):
            if other.stamp != self.stamp:
                raise StampMismatch(f"fields from snapshots {self.stamp} and {other.stamp}")
            return other.values
        return other

    def __add__(self, other):
        return GridField(self.values + self._check(other), self.stamp, self.units)

    def __sub__(self, other):
        return GridField(self.values - self._check(other), self.stamp, self.units)

    def __mul__(self, other):
        return GridField(self.values * self._check(other), self.stamp)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return GridField(-self.values, self.stamp, self.units)

    @property
    def is_vector(self):
        return self.values.ndim == 3


@dataclass(frozen=True)
class BoundaryField:
    """Values at the nodes of the free surface (``side='top'``) or bottom (``'bottom'``)."""

    values: np.ndarray
    side: str
    weights: np.ndarray = field(repr=False)
    stamp: str = ""

    def __post_init__(self):
        if self.side not in ("top", "bottom"):
            raise ValueError(f"unknown boundary side {self.side!r}")
        if len(self.values) != len(self.weights):
            raise ValueError("node count does not match the boundary")
        if np.any(self.weights <= 0):
            raise ValueError("integration weights must be positive")

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def integral(self):
        return float(np.tensordot(self.weights, self.values, axes=(0, 0)))


def _values(x):
    return x.values if isinstance(x, (GridField, BoundaryField)) else np.asarray(x, float)


def _d_index(a, axis):
    return np.gradient(a, axis=axis, edge_order=2)


def _d2_index(a):
    """Second index derivative along axis 0, second order up to the ends.

    Inside: nested central differences (blind to the odd-even mode, which keeps the
    capillary term from stiffening).  Next to the ends, where the nested stencil
    would reuse a one-sided first derivative: compact differences; at the ends: the
    one-sided second-order stencil.
    """
    out = _d_index(_d_index(a, 0), 0)
    out[1] = a[2] - 2 * a[1] + a[0]
    out[-2] = a[-3] - 2 * a[-2] + a[-1]
    out[0] = 2 * a[0] - 5 * a[1] + 4 * a[2] - a[3]
    out[-1] = 2 * a[-1] - 5 * a[-2] + 4 * a[-3] - a[-4]
    return out


def curve_frame(points):
    """Tangent, outward normal, curvature and index speed of the free-surface polyline.

    Points are ordered left to right, so the counterclockwise tangent is ``-X_i/|X_i|``.
    """
    x_i = _d_index(points, 0)
    x_ii = _d2_index(points)
    speed = np.linalg.norm(x_i, axis=1)
    tau = -x_i / speed[:, None]
    normal = np.stack([tau[:, 1], -tau[:, 0]], axis=1)
    kappa = -(x_i[:, 0] * x_ii[:, 1] - x_i[:, 1] * x_ii[:, 0]) / speed**3
    return tau, normal, kappa, speed


def _line_mass(points):
    """Consistent P1 mass matrix along an open polyline."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    n = len(points)
    main = np.zeros(n)
    main[:-1] += seg / 3.0
    main[1:] += seg / 3.0
    off = seg / 6.0
    return sp.diags([off, main, off], [-1, 0, 1], format="csr"), seg


class Mesh:
    """Structured Q1 finite-element mesh with mapped finite-difference calculus."""

    def __init__(self, nodes):
        nodes = np.ascontiguousarray(nodes, dtype=float)
        if nodes.ndim != 3 or nodes.shape[2] != 2:
            raise ValueError("nodes must have shape (M+1, N+1, 2)")
        self.nodes = nodes
        self.nodes.setflags(write=False)
        self.M = nodes.shape[0] - 1
        self.N = nodes.shape[1] - 1
        self.stamp = hashlib.blake2b(nodes.tobytes(), digest_size=8).hexdigest()

    # ------------------------------------------------------------------ indexing
    @property
    def shape(self):
        return (self.M + 1, self.N + 1)

    @property
    def n_nodes(self):
        return (self.M + 1) * (self.N + 1)

    def flat(self, i, j):
        return np.asarray(i) * (self.N + 1) + np.asarray(j)

    @cached_property
    def surface_index(self):
        return self.flat(np.arange(self.M + 1), self.N)

    @cached_property
    def bottom_ij(self):
        """(i, j) pairs along the bottom, counterclockwise from p_l to p_r."""
        M, N = self.M, self.N
        left = [(0, j) for j in range(N, -1, -1)]
        floor = [(i, 0) for i in range(1, M + 1)]
        right = [(M, j) for j in range(1, N + 1)]
        return np.array(left + floor + right)

    @cached_property
    def bottom_index(self):
        ij = self.bottom_ij
        return self.flat(ij[:, 0], ij[:, 1])

    @property
    def surface_points(self):
        return self.nodes[:, self.N]

    @property
    def bottom_points(self):
        ij = self.bottom_ij
        return self.nodes[ij[:, 0], ij[:, 1]]

    @cached_property
    def free_mixed(self):
        mask = np.ones(self.n_nodes, bool)
        mask[self.surface_index] = False
        return np.flatnonzero(mask)

    @cached_property
    def interior_index(self):
        mask = np.zeros(self.shape, bool)
        mask[1:-1, 1:-1] = True
        return np.flatnonzero(mask.ravel())

    @cached_property
    def boundary_index(self):
        mask = np.ones(self.shape, bool)
        mask[1:-1, 1:-1] = False
        return np.flatnonzero(mask.ravel())

    # ------------------------------------------------------------ element data
    @cached_property
    def _elements(self):
        M, N = self.M, self.N
        ii, jj = np.meshgrid(np.arange(M), np.arange(N), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        conn = np.stack([self.flat(ii + a, jj + b) for a, b in _CORNERS], axis=1)
        xe = self.nodes.reshape(-1, 2)[conn]  # (E, 4, 2)
        return conn, xe

    @cached_property
    def _element_matrices(self):
        conn, xe = self._elements
        E = len(conn)
        ke = np.zeros((E, 4, 4))
        me = np.zeros((E, 4, 4))
        for (n, dn), w in _QUAD:
            jac = np.einsum("eka,kb->eab", xe, dn)  # d x_a / d ref_b
            det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
            if np.any(det <= 0):
                raise ValueError("mesh has non-positive element Jacobian")
            inv = np.empty_like(jac)
            inv[:, 0, 0] = jac[:, 1, 1] / det
            inv[:, 1, 1] = jac[:, 0, 0] / det
            inv[:, 0, 1] = -jac[:, 0, 1] / det
            inv[:, 1, 0] = -jac[:, 1, 0] / det
            g = np.einsum("kb,eba->eka", dn, inv)  # physical shape gradients
            ke += w * det[:, None, None] * np.einsum("eka,ela->ekl", g, g)
            me += w * det[:, None, None] * np.outer(n, n)[None]
        return ke, me

    def _assemble(self, local):
        conn, _ = self._elements
        rows = np.repeat(conn, 4, axis=1).ravel()
        cols = np.tile(conn, (1, 4)).ravel()
        return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(self.n_nodes, self.n_nodes))

    @cached_property
    def stiffness(self):
        return self._assemble(self._element_matrices[0])

    @cached_property
    def mass(self):
        return self._assemble(self._element_matrices[1])

    @cached_property
    def weights(self):
        """Quadrature weights: ``weights @ u.ravel()`` integrates the Q1 interpolant."""
        return np.asarray(self.mass.sum(axis=1)).ravel()

    @cached_property
    def area(self):
        return float(self.weights.sum())

    def integrate(self, u):
        u = _values(u)
        flat = u.reshape(self.n_nodes, *u.shape[2:])
        return np.tensordot(self.weights, flat, axes=(0, 0))

    def l2_norm(self, u):
        u = _values(u)
        sq = u**2 if u.ndim == 2 else np.sum(u**2, axis=-1)
        return float(np.sqrt(max(self.integrate(sq), 0.0)))

    def cell_jacobians(self):
        """Jacobian determinants of every cell evaluated at its four corners."""
        _, xe = self._elements
        out = []
        for a, b in [(-1, -1), (1, -1), (1, 1), (-1, 1)]:
            _, dn = _shape(a, b)
            jac = np.einsum("eka,kb->eab", xe, dn)
            out.append(jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0])
        return np.stack(out, axis=1)

    # --------------------------------------------------------- boundary masses
    @cached_property
    def _surface_mass(self):
        return _line_mass(self.surface_points)

    @property
    def surface_mass(self):
        return self._surface_mass[0]

    @cached_property
    def surface_weights(self):
        return np.asarray(self.surface_mass.sum(axis=1)).ravel()

    @cached_property
    def surface_length(self):
        return float(self._surface_mass[1].sum())

    @cached_property
    def _bottom_mass(self):
        return _line_mass(self.bottom_points)

    @property
    def bottom_mass(self):
        return self._bottom_mass[0]

    @cached_property
    def bottom_weights(self):
        return np.asarray(self.bottom_mass.sum(axis=1)).ravel()

    def surface_field(self, values):
        return BoundaryField(np.asarray(values, float), "top", self.surface_weights, self.stamp)

    def bottom_field(self, values):
        return BoundaryField(np.asarray(values, float), "bottom", self.bottom_weights, self.stamp)

    def grid_field(self, values, units=""):
        return GridField(np.asarray(values, float), self.stamp, units)

    def check(self, *fields):
        for f in fields:
            stamp = getattr(f, "stamp", None)
            if stamp not in (None, "") and stamp != self.stamp:
                raise StampMismatch(f"field from snapshot {stamp} used on {self.stamp}")

    # ------------------------------------------------------------- calculus
    @cached_property
    def _metric(self):
        x_i = _d_index(self.nodes, 0)
        x_j = _d_index(self.nodes, 1)
        det = x_i[..., 0] * x_j[..., 1] - x_j[..., 0] * x_i[..., 1]
        return x_i, x_j, det

    def grad(self, u):
        """Nodal gradient by second-order mapped differences.

        Scalar input gives ``(..., 2)``; vector input ``(..., 2)`` gives ``(..., 2, 2)``
        with ``out[..., a, b] = d u_a / d x_b``.
        """
        u = _values(u)
        x_i, x_j, det = self._metric
        u_i = _d_index(u, 0)
        u_j = _d_index(u, 1)
        extra = (slice(None), slice(None)) + (None,) * (u.ndim - 2)
        xi, zi = x_i[..., 0][extra], x_i[..., 1][extra]
        xj, zj = x_j[..., 0][extra], x_j[..., 1][extra]
        det = det[extra]
        ux = (zj * u_i - zi * u_j) / det
        uz = (-xj * u_i + xi * u_j) / det
        return np.stack([ux, uz], axis=-1)

    def div(self, w):
        g = self.grad(w)
        return g[..., 0, 0] + g[..., 1, 1]

    def hessian(self, u):
        """``out[..., a, b] = d^2 u / dx_a dx_b`` (symmetrised)."""
        h = self.grad(self.grad(u))
        return 0.5 * (h + np.swapaxes(h, -1, -2))

    def laplacian(self, u):
        h = self.grad(self.grad(u))
        return np.trace(h, axis1=-2, axis2=-1)

    # ------------------------------------------------------ surface geometry
    @cached_property
    def _surface_param(self):
        return curve_frame(self.surface_points)

    @property
    def surface_tangent(self):
        return self._surface_param[0]

    @property
    def surface_normal(self):
        return self._surface_param[1]

    @property
    def curvature(self):
        return self._surface_param[2]

    def d_tau(self, f):
        """Tangential derivative along ``tau_t`` of surface nodal values (any trailing shape)."""
        f = _values(f)
        speed = self._surface_param[3]
        df = _d_index(f, 0)
        return -df / speed.reshape(-1, *([1] * (f.ndim - 1)))

    def laplace_beltrami(self, f):
        return self.d_tau(self.d_tau(f))

    def surface_trace(self, u):
        return _values(u)[:, self.N]

    @cached_property
    def bottom_normal(self):
        pts = self.bottom_points
        t = np.diff(pts, axis=0)
        t /= np.linalg.norm(t, axis=1)[:, None]
        tn = np.empty((len(pts), 2))
        tn[0], tn[-1] = t[0], t[-1]
        tn[1:-1] = t[:-1] + t[1:]
        tn /= np.linalg.norm(tn, axis=1)[:, None]
        return np.stack([tn[:, 1], -tn[:, 0]], axis=1)

    @cached_property
    def bottom_tangent(self):
        n = self.bottom_normal
        return np.stack([-n[:, 1], n[:, 0]], axis=1)

    def bottom_trace(self, u):
        u = _values(u)
        ij = self.bottom_ij
        return u[ij[:, 0], ij[:, 1]]

    def bottom_normal_grid(self):
        """Bottom normals scattered onto a grid array (zero off the bottom)."""
        out = np.zeros(self.shape + (2,))
        ij = self.bottom_ij
        out[ij[:, 0], ij[:, 1]] = self.bottom_normal
        return out
