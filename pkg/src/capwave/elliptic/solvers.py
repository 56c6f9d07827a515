"""Mixed and Neumann Poisson solvers on a boundary-fitted Q1 mesh.

Weak form used throughout: for ``Lap u = h`` with boundary flux ``dn u``,
``K u = -M h + (boundary loads of dn u)``.  Surface fluxes are recovered from the
residual of the assembled system, which makes the discrete Dirichlet-Neumann map
exactly symmetric and flux-free.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import CompatibilityError, ConvergenceError
from ..mesh import BoundaryField, GridField, Mesh

__all__ = [
    "EllipticSolver",
    "solver_for",
    "solve_mbvp",
    "solve_nbvp",
    "harmonic_extension",
    "dtn",
    "inv_laplace",
]

SOLVER_TOL = 1e-9


def _arr(x, shape=None):
    if x is None:
        return None if shape is None else np.zeros(shape)
    if isinstance(x, (GridField, BoundaryField)):
        return np.asarray(x.values, float)
    return np.asarray(x, float) if shape is None else np.broadcast_to(np.asarray(x, float), shape).copy()


def _bottom_data(g, nb):
    g = _arr(g)
    if g is not None and g.ndim == 0:
        g = np.full(nb, float(g))
    return g


class EllipticSolver:
    """Cached factorisations for every elliptic subproblem on one mesh snapshot."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.K = mesh.stiffness.tocsr()
        self.Mass = mesh.mass.tocsr()
        self._lu_mixed = None
        self._lu_neumann = None
        self._lu_surface = None
        self.last_defect = 0.0

    # ---------------------------------------------------------------- helpers
    def _check(self, *fields):
        self.mesh.check(*fields)

    def _bottom_load(self, g):
        """Load of the bottom flux ``g``.

        ``g`` of shape ``(nb,)`` is nodal flux data; shape ``(nb, 2)`` is a nodal vector
        field ``w`` whose flux ``w.n_b`` is taken with the exact normal of each segment,
        so corners of the bottom are handled without an averaged normal.
        """
        m = self.mesh
        load = np.zeros(m.n_nodes)
        if g is None:
            return load
        if g.ndim == 1:
            np.add.at(load, m.bottom_index, m.bottom_mass @ g)
            return load
        pts = m.bottom_points
        seg = np.diff(pts, axis=0)
        length = np.linalg.norm(seg, axis=1)
        n_seg = np.stack([seg[:, 1], -seg[:, 0]], axis=1) / length[:, None]
        a = np.einsum("ka,ka->k", g[:-1], n_seg)
        b = np.einsum("ka,ka->k", g[1:], n_seg)
        nodal = np.zeros(len(pts))
        nodal[:-1] += length * (2 * a + b) / 6
        nodal[1:] += length * (a + 2 * b) / 6
        np.add.at(load, m.bottom_index, nodal)
        return load

    def bottom_integral(self, g):
        g = _bottom_data(g, len(self.mesh.bottom_index))
        return float(self._bottom_load(g).sum()) if g is not None else 0.0

    def _surface_load(self, f):
        m = self.mesh
        load = np.zeros(m.n_nodes)
        load[m.surface_index] += m.surface_mass @ f
        return load

    def _verify(self, A, x, b, what):
        res = np.linalg.norm(A @ x - b)
        scale = np.linalg.norm(b) + 1e-300
        if not np.isfinite(res) or res > SOLVER_TOL * max(scale, 1.0):
            raise ConvergenceError(f"{what}: direct solve residual {res:.3e}", history=[res])

    @property
    def lu_mixed(self):
        if self._lu_mixed is None:
            free = self.mesh.free_mixed
            rows = self.K[free]
            self._A_mixed = rows[:, free].tocsc()
            self._K_ft = rows[:, self.mesh.surface_index].tocsr()
            self._lu_mixed = spla.splu(self._A_mixed)
        return self._lu_mixed

    @property
    def lu_neumann(self):
        if self._lu_neumann is None:
            w = self.mesh.weights[:, None]
            A = sp.bmat([[self.K, sp.csr_matrix(w)], [sp.csr_matrix(w.T), None]], format="csc")
            self._A_neumann = A
            self._lu_neumann = spla.splu(A)
        return self._lu_neumann

    @property
    def lu_surface(self):
        if self._lu_surface is None:
            self._lu_surface = spla.splu(self.mesh.surface_mass.tocsc())
        return self._lu_surface

    # ----------------------------------------------------------------- solves
    def mbvp(self, h=None, f=None, g=None):
        """``Lap u = h``, ``u = f`` on the surface, ``dn u = g`` on the bottom."""
        m = self.mesh
        self._check(h, f)
        h = _arr(h, m.shape)
        f = _arr(f, (m.M + 1,))
        g = _bottom_data(g, len(m.bottom_index))
        rhs = -(self.Mass @ h.ravel()) + self._bottom_load(g)
        free, top = m.free_mixed, m.surface_index
        lu = self.lu_mixed
        b = rhs[free] - self._K_ft @ f
        u = np.empty(m.n_nodes)
        u[top] = f
        u[free] = lu.solve(b)
        self._verify(self._A_mixed, u[free], b, "mixed problem")
        return u.reshape(m.shape)

    def nbvp(self, h=None, f=None, g=None, gauge="mean_zero", comp_tol=1e-8, pin=None):
        """``Lap u = h``, ``dn u = f`` on the surface, ``dn u = g`` on the bottom."""
        m = self.mesh
        self._check(h, f)
        h = _arr(h, m.shape)
        f = _arr(f, (m.M + 1,))
        g = _bottom_data(g, len(m.bottom_index))
        int_h = float(m.weights @ h.ravel())
        int_f = float(m.surface_weights @ f)
        int_g = self.bottom_integral(g)
        defect = int_f + int_g - int_h
        abs_g = np.abs(self._bottom_load(g)).sum() if g is not None else 0.0
        scale = m.weights @ np.abs(h.ravel()) + m.surface_weights @ np.abs(f) + abs_g
        if abs(defect) > comp_tol * max(scale, 1e-300) and abs(defect) > 1e-14:
            raise CompatibilityError(defect)
        self.last_defect = defect
        h = h + defect / m.area
        rhs = -(self.Mass @ h.ravel()) + self._surface_load(f) + self._bottom_load(g)
        b = np.append(rhs, 0.0)
        lu = self.lu_neumann
        x = lu.solve(b)
        self._verify(self._A_neumann, x, b, "Neumann problem")
        u = x[:-1].reshape(m.shape)
        if gauge == "pinned":
            if pin is None:
                pin = (m.M // 2, 0)
            u = u - u[pin]
        elif gauge != "mean_zero":
            raise ValueError(f"unknown gauge {gauge!r}")
        return u

    def surface_flux(self, u, h=None, g=None):
        """Consistent normal derivative of ``u`` on the free surface."""
        m = self.mesh
        u = _arr(u)
        h = _arr(h, m.shape)
        R = self.K @ u.ravel() + self.Mass @ h.ravel() - self._bottom_load(_bottom_data(g, len(m.bottom_index)))
        return self.lu_surface.solve(R[m.surface_index])

    def harmonic_extension(self, f):
        return self.mbvp(None, f, None)

    def dtn(self, f):
        f = _arr(f)
        if f.ndim == 2:
            return np.stack([self.dtn(f[:, k]) for k in range(f.shape[1])], axis=1)
        return self.surface_flux(self.harmonic_extension(f))

    def inv_laplace(self, h=None, g=None):
        return self.mbvp(h, None, g)

    def dtn_matrix(self):
        """Dense matrix of the discrete Dirichlet-Neumann map on surface nodes."""
        m = self.mesh
        n = m.M + 1
        free, top = m.free_mixed, m.surface_index
        U = np.zeros((m.n_nodes, n))
        U[top] = np.eye(n)
        U[free] = self.lu_mixed.solve(-self._K_ft.toarray())
        R = (self.K @ U)[top]
        return self.lu_surface.solve(R)


def solver_for(mesh: Mesh) -> EllipticSolver:
    s = mesh.__dict__.get("_elliptic")
    if s is None:
        s = EllipticSolver(mesh)
        mesh.__dict__["_elliptic"] = s
    return s


def _wrap(mesh, u, units=""):
    return GridField(u, mesh.stamp, units)


def solve_mbvp(mesh, h=None, f=None, g=None):
    return _wrap(mesh, solver_for(mesh).mbvp(h, f, g))


def solve_nbvp(mesh, h=None, f=None, g=None, gauge="mean_zero", comp_tol=1e-8):
    return _wrap(mesh, solver_for(mesh).nbvp(h, f, g, gauge=gauge, comp_tol=comp_tol))


def harmonic_extension(mesh, f):
    return _wrap(mesh, solver_for(mesh).harmonic_extension(f))


def dtn(mesh, f):
    return mesh.surface_field(solver_for(mesh).dtn(f))


def inv_laplace(mesh, h=None, g=None):
    return _wrap(mesh, solver_for(mesh).inv_laplace(h, g))
