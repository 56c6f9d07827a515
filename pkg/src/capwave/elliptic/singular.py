"""Corner singularity extraction near the two contact points.

Near a contact point the fluid occupies a wedge of opening ``omega`` between the wall
and the free surface.  Polar coordinates ``(r, theta)`` are centred at the contact
point with ``theta = 0`` along the wall and ``theta = omega`` along the surface; this
rigid frame is the corner map ``T_i``.  The leading singular modes are

* Neumann on both sides: ``r**(pi/omega) * cos(pi*theta/omega)``
* Neumann on the wall, Dirichlet on the surface: ``r**(pi/(2 omega)) * cos(pi*theta/(2 omega))``

with the angular factor normalised to 1 on the wall.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CloughTocher2DInterpolator

from ..errors import ResolutionError
from ..mesh import GridField, Mesh

__all__ = [
    "CornerMap",
    "SingularDecomposition",
    "corner_map",
    "singular_exponent",
    "singular_mode",
    "gate",
    "singular_decompose",
    "fit_exponent",
    "local_fit_order",
]

MIN_LAYERS = 6


@dataclass(frozen=True)
class CornerMap:
    """Rigid map taking the corner sector to a straight wedge with the wall on ``theta = 0``."""

    origin: np.ndarray
    wall: np.ndarray
    inward: np.ndarray
    omega: float
    side: str = "l"

    def polar(self, X):
        rel = np.asarray(X, float) - self.origin
        a = rel @ self.wall
        b = rel @ self.inward
        return np.hypot(a, b), np.arctan2(b, a)

    def point(self, r, theta):
        r, theta = np.broadcast_arrays(r, theta)
        return self.origin + r[..., None] * (np.cos(theta)[..., None] * self.wall + np.sin(theta)[..., None] * self.inward)


def corner_map(mesh: Mesh, side: str, omega=None) -> CornerMap:
    i = 0 if side == "l" else mesh.M
    sgn = 1 if side == "l" else -1
    p = mesh.nodes[i, mesh.N]
    wall = mesh.nodes[i, mesh.N - 1] - p
    wall = wall / np.linalg.norm(wall)
    e_s = -3 * p + 4 * mesh.nodes[i + sgn, mesh.N] - mesh.nodes[i + 2 * sgn, mesh.N]
    e_s = e_s / np.linalg.norm(e_s)
    # unit vector orthogonal to the wall pointing into the fluid
    inward = e_s - (e_s @ wall) * wall
    inward /= np.linalg.norm(inward)
    if omega is None:
        omega = float(np.arctan2(e_s @ inward, e_s @ wall))
    return CornerMap(p, wall, inward, float(omega), side)


def singular_exponent(omega, kind):
    if kind == "neumann":
        return np.pi / omega
    if kind == "mixed":
        return np.pi / (2 * omega)
    raise ValueError(f"unknown boundary kind {kind!r}")


def singular_mode(r, theta, omega, kind):
    alpha = singular_exponent(omega, kind)
    return r**alpha * np.cos(alpha * theta)


def gate(omega, kind):
    """Whether the corner mode is kept: the Neumann mode only above pi/3."""
    if kind == "neumann":
        return 1.0 if np.pi / 3 < omega < np.pi / 2 else 0.0
    return 1.0


@dataclass(frozen=True)
class SingularDecomposition:
    regular: GridField
    coefficients: tuple
    exponents: tuple
    bc_kind: str
    corner_maps: tuple
    radius: float
    fit_residuals: tuple
    fitted_exponents: tuple

    @property
    def c_l(self):
        return self.coefficients[0]

    @property
    def c_r(self):
        return self.coefficients[1]


def _smooth_basis(X, origin):
    """Cubic polynomials about the corner; the first six columns are the quadratics."""
    x, z = (X - origin).T
    return np.stack([np.ones_like(x), x, z, x * x, x * z, z * z, x**3, x * x * z, x * z * z, z**3], axis=1)


def _annulus(mesh, cmap, r0):
    pts = mesh.nodes.reshape(-1, 2)
    r, theta = cmap.polar(pts)
    sel = (r >= r0 / 4) & (r <= r0) & (theta >= -1e-9) & (theta <= cmap.omega + 1e-9)
    wall_r = np.linalg.norm(mesh.nodes[0 if cmap.side == "l" else -1, :] - cmap.origin, axis=1)
    layers = int(np.sum((wall_r >= r0 / 4) & (wall_r <= r0)))
    return sel, r, theta, layers


def _fit_corner(mesh, u, cmap, kind, r0):
    sel, r, theta, layers = _annulus(mesh, cmap, r0)
    if layers < MIN_LAYERS:
        raise ResolutionError(
            f"corner annulus [{r0 / 4:.3g}, {r0:.3g}] has {layers} radial layers, need {MIN_LAYERS}"
        )
    pts = mesh.nodes.reshape(-1, 2)[sel]
    w = np.sqrt(mesh.weights[sel])
    S = singular_mode(r[sel], theta[sel], cmap.omega, kind)
    A = np.column_stack([S, _smooth_basis(pts, cmap.origin)])
    coef, *_ = np.linalg.lstsq(A * w[:, None], u.ravel()[sel] * w, rcond=None)
    res = u.ravel()[sel] - A @ coef
    return float(coef[0]), float(np.sqrt(np.sum(w**2 * res**2) / np.sum(w**2)))


def singular_decompose(mesh: Mesh, u, bc_kind, angles=None, r0=0.25) -> SingularDecomposition:
    """Split ``u`` into a regular part and the two gated corner modes."""
    vals = np.asarray(getattr(u, "values", u), float)
    maps, coefs, alphas, resid, fitted = [], [], [], [], []
    reg = vals.copy().ravel()
    pts = mesh.nodes.reshape(-1, 2)
    for k, side in enumerate("lr"):
        om = None if angles is None else angles[k]
        cmap = corner_map(mesh, side, om)
        if not 0 < cmap.omega < np.pi / 2:
            raise ValueError(f"corner angle {cmap.omega:.6g} outside (0, pi/2)")
        alpha = singular_exponent(cmap.omega, bc_kind)
        if gate(cmap.omega, bc_kind):
            c, res = _fit_corner(mesh, vals, cmap, bc_kind, r0)
            r, theta = cmap.polar(pts)
            inside = r <= r0
            reg[inside] -= c * singular_mode(r[inside], theta[inside], cmap.omega, bc_kind)
            try:
                slope = fit_exponent(mesh, vals, cmap, bc_kind, r0)
            except (ValueError, ResolutionError):
                slope = np.nan
        else:
            c, res, slope = 0.0, 0.0, np.nan
        maps.append(cmap)
        coefs.append(c)
        alphas.append(alpha)
        resid.append(res)
        fitted.append(slope)
    stamp = getattr(u, "stamp", mesh.stamp)
    return SingularDecomposition(
        GridField(reg.reshape(mesh.shape), stamp),
        tuple(coefs),
        tuple(alphas),
        bc_kind,
        tuple(maps),
        r0,
        tuple(resid),
        tuple(fitted),
    )


def arc_projection(mesh, u, cmap, kind, radii, n_theta=24):
    """Angular projection of ``u`` onto the leading mode on arcs around the corner."""
    alpha = singular_exponent(cmap.omega, kind)
    interp = CloughTocher2DInterpolator(mesh.nodes.reshape(-1, 2), np.asarray(u, float).ravel())
    gx, gw = np.polynomial.legendre.leggauss(n_theta)
    theta = 0.5 * cmap.omega * (gx + 1)
    wts = 0.5 * cmap.omega * gw
    out = []
    for r in radii:
        vals = interp(cmap.point(np.full_like(theta, r), theta))
        if np.any(np.isnan(vals)):
            raise ValueError("arc leaves the fluid domain")
        out.append(2 / cmap.omega * np.sum(wts * vals * np.cos(alpha * theta)))
    return np.array(out)


def fit_exponent(mesh, u, cmap, kind, r0, n_radii=10):
    """Log-log slope of the arc projection over ``[r0/4, r0]``.

    Meaningful when the boundary data vanish near the corner, so that the local
    expansion contains only the wedge eigenmodes.
    """
    radii = np.geomspace(r0 / 4, r0, n_radii)
    proj = arc_projection(mesh, u, cmap, kind, radii)
    slope, _ = np.polyfit(np.log(radii), np.log(np.abs(proj)), 1)
    return float(slope)


def local_fit_order(mesh, u, cmap, radii):
    """Order of the best local quadratic fit residual on disks of shrinking radius."""
    pts = mesh.nodes.reshape(-1, 2)
    r, _ = cmap.polar(pts)
    vals = np.asarray(u, float).ravel()
    res = []
    for rho in radii:
        sel = r <= rho
        A = _smooth_basis(pts[sel], cmap.origin)[:, :6]
        coef, *_ = np.linalg.lstsq(A, vals[sel], rcond=None)
        res.append(np.max(np.abs(vals[sel] - A @ coef)))
    slope, _ = np.polyfit(np.log(radii), np.log(res), 1)
    return float(slope), np.array(res)
