"""Velocity recovery from the lifted elliptic problem.

The meridional velocity of an axisymmetric flow with swirl is recovered from
a scalar potential solving

    -L phi = g,      L = d_rr + (3/r) d_r + d_zz,

the radial reduction of the Laplacian on R^4 x R, followed by

    u^r = -r d_z phi,       u^z = 2 phi + r d_r phi,

which is divergence-free in the meridional sense by construction.

The problem is posed on the whole space; on a truncated grid the Dirichlet
boundary values are obtained by direct quadrature of the five-dimensional
Newtonian potential.  For sources and targets both axisymmetric the angular
(orbit) integral reduces to a one-parameter profile

    phi(r, z) = (1/2pi) int g(r', z') r'^3 A^{-3/2} J(beta) dr' dz',
    A = r^2 + r'^2 + (z - z')^2,     beta = 2 r r' / A,
    J(beta) = int_0^pi sin^2(t) (1 - beta cos t)^{-3/2} dt,

with J tabulated once per process.  Naive zero-Dirichlet truncation would
pollute the strain at the packet, so this far-field treatment is mandatory.

Interior discretization is the standard second-order five-point operator;
the recovered velocity uses matching second-order stencils, while pointwise
strain diagnostics post-differentiate at fourth order.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.integrate import quad_vec
from scipy.sparse.linalg import splu

from qel import backend, bumps
from qel.fields import MeridionalGrid, PacketFrame, ScalarField, gradient

_BETA_MAX = 0.9995
_J_TABLE_SIZE = 200_001
_j_table = None
_splu_cache = {}


class RecoveryError(RuntimeError):
    pass


def orbit_profile_table():
    """Tabulate J(beta) on a uniform grid over [0, _BETA_MAX]."""
    global _j_table
    if _j_table is None:
        beta = np.linspace(0.0, _BETA_MAX, _J_TABLE_SIZE)

        def integrand(t):
            return np.sin(t) ** 2 * (1.0 - beta * np.cos(t)) ** -1.5

        val, _ = quad_vec(integrand, 0.0, np.pi, epsabs=1e-12, epsrel=1e-12)
        _j_table = val
    return _j_table, _BETA_MAX


_SUPPORT_RTOL = 1e-13


def _support_mask(values):
    """Nonzero mask with a relative floor.

    Semi-Lagrangian transport smears an exponentially tiny interpolation
    fringe a couple of cells beyond the advected support each step; values
    below 1e-13 of the field maximum are not treated as source support
    (their contribution is far below discretization error).
    """
    scale = np.max(np.abs(values))
    if scale == 0.0:
        return np.zeros(values.shape, dtype=bool)
    return np.abs(values) > _SUPPORT_RTOL * scale


def freespace_potential(g: ScalarField, r_pts, z_pts):
    """Evaluate the free-space potential of a compact source at target points.

    Targets must stay away from the source support (the orbit profile table
    is truncated near beta = 1, i.e. near coincidence).
    """
    jtab, beta_max = orbit_profile_table()
    grid = g.grid
    vals = g.values
    mask = _support_mask(vals)
    if g.support is not None:
        rr, zz = grid.mesh()
        r_lo, r_hi, z_lo, z_hi = g.support
        mask &= (rr >= r_lo) & (rr <= r_hi) & (zz >= z_lo) & (zz <= z_hi)
    r_pts = np.ascontiguousarray(r_pts, dtype=float)
    z_pts = np.ascontiguousarray(z_pts, dtype=float)
    out = np.zeros(r_pts.shape)
    if not mask.any():
        return out
    rr, zz = grid.mesh()
    rs = np.ascontiguousarray(rr[mask])
    zs = np.ascontiguousarray(zz[mask])
    gw = np.ascontiguousarray(vals[mask] * rs**3 * grid.dr * grid.dz)
    # guard: beta approaches 1 only when a target approaches the source set
    d2 = (np.subtract.outer(r_pts, np.array([rs.min(), rs.max()])) ** 2).min(axis=1)
    near_r = (r_pts >= rs.min()) & (r_pts <= rs.max())
    d2[near_r] = 0.0
    dz2 = (np.subtract.outer(z_pts, np.array([zs.min(), zs.max()])) ** 2).min(axis=1)
    near_z = (z_pts >= zs.min()) & (z_pts <= zs.max())
    dz2[near_z] = 0.0
    sep2 = d2 + dz2
    amax = r_pts**2 + rs.max() ** 2 + np.maximum((z_pts - zs.min()) ** 2,
                                                 (z_pts - zs.max()) ** 2)
    if np.any(1.0 - sep2 / amax > beta_max):
        raise RecoveryError("potential target too close to the source support")
    backend.farfield_sum(r_pts, z_pts, rs, zs, gw, jtab, beta_max, out)
    return out / (2.0 * np.pi)


def _grid_key(grid: MeridionalGrid):
    return (grid.n_r, grid.n_z, grid.r_min, grid.r_max, grid.z_min, grid.z_max)


def _factorized_operator(grid: MeridionalGrid):
    key = _grid_key(grid)
    if key not in _splu_cache:
        n_r, n_z = grid.n_r, grid.n_z
        dr, dz = grid.dr, grid.dz
        r = grid.r()
        ii, jj = np.meshgrid(np.arange(n_r), np.arange(n_z), indexing="ij")
        k = (ii * n_z + jj).ravel()
        interior = ((ii > 0) & (ii < n_r - 1) & (jj > 0) & (jj < n_z - 1)).ravel()
        ki = k[interior]
        ri = r[(ii.ravel())[interior]]
        ce = 1.0 / dr**2 + 3.0 / (2.0 * ri * dr)
        cw = 1.0 / dr**2 - 3.0 / (2.0 * ri * dr)
        cz = np.full_like(ri, 1.0 / dz**2)
        cc = np.full_like(ri, 2.0 / dr**2 + 2.0 / dz**2)
        rows = np.concatenate([ki, ki, ki, ki, ki, k[~interior]])
        cols = np.concatenate([ki, ki + n_z, ki - n_z, ki + 1, ki - 1, k[~interior]])
        vals = np.concatenate([cc, -ce, -cw, -cz, -cz,
                               np.ones(np.count_nonzero(~interior))])
        a = sparse.csc_matrix((vals, (rows, cols)), shape=(n_r * n_z, n_r * n_z))
        if len(_splu_cache) > 6:
            _splu_cache.clear()
        _splu_cache[key] = (splu(a), a)
    return _splu_cache[key]


# second-order first derivative, centered inside, one-sided at the two edges
def _deriv2(values, h, axis):
    v = np.moveaxis(values, axis, 0)
    d = np.empty_like(v)
    d[1:-1] = 0.5 * (v[2:] - v[:-2])
    d[0] = -1.5 * v[0] + 2.0 * v[1] - 0.5 * v[2]
    d[-1] = 1.5 * v[-1] - 2.0 * v[-2] + 0.5 * v[-3]
    return np.moveaxis(d, 0, axis) / h


@dataclass
class RecoveryResult:
    phi: ScalarField
    u_r: ScalarField
    u_z: ScalarField
    div_residual_max: float
    iterations: int
    backward_error: float


def _check_support_interior(g: ScalarField, margin_nodes=3):
    mask = _support_mask(g.values)
    if not mask.any():
        return
    i_any = np.where(mask.any(axis=1))[0]
    j_any = np.where(mask.any(axis=0))[0]
    if (i_any.min() < margin_nodes or i_any.max() >= g.grid.n_r - margin_nodes
            or j_any.min() < margin_nodes or j_any.max() >= g.grid.n_z - margin_nodes):
        raise RecoveryError("source support touches the grid boundary")


def solve_recovery(g: ScalarField, tol=1e-9) -> RecoveryResult:
    """Solve -L phi = g with far-field Dirichlet data, recover the velocity."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    _check_support_interior(g)
    grid = g.grid
    n_r, n_z = grid.n_r, grid.n_z
    lu, a = _factorized_operator(grid)
    b = g.values.copy()
    boundary = np.zeros((n_r, n_z), dtype=bool)
    boundary[0, :] = boundary[-1, :] = True
    boundary[:, 0] = boundary[:, -1] = True
    rr, zz = grid.mesh()
    b[boundary] = freespace_potential(g, rr[boundary], zz[boundary])
    phi = lu.solve(b.ravel())
    resid = a @ phi - b.ravel()
    # normwise backward error of the linear solve
    scale = (abs(a).sum(axis=1).max() * np.max(np.abs(phi))
             + np.max(np.abs(b)) + 1e-300)
    backward = float(np.max(np.abs(resid)) / scale)
    if backward > tol:
        raise RecoveryError(f"solver backward error {backward:.3e} exceeds tol {tol:.3e}")
    phi = phi.reshape(n_r, n_z)
    r_col = grid.r()[:, None]
    u_r = -r_col * _deriv2(phi, grid.dz, axis=1)
    u_z = 2.0 * phi + r_col * _deriv2(phi, grid.dr, axis=0)
    phi_f = ScalarField(grid, phi)
    ur_f = ScalarField(grid, u_r)
    uz_f = ScalarField(grid, u_z)
    dur_dr, _ = gradient(ur_f)
    _, duz_dz = gradient(uz_f)
    div = dur_dr.values + u_r / r_col + duz_dz.values
    div_max = float(np.max(np.abs(div[2:-2, 2:-2])))
    return RecoveryResult(phi_f, ur_f, uz_f, div_max, 1, backward)


def strain_at_center(result: RecoveryResult, frame: PacketFrame) -> float:
    """Hyperbolic strain sigma = -d_z u^z at the tracked center."""
    grid = result.u_z.grid
    if not (grid.r_min < frame.r_star < grid.r_max):
        raise RecoveryError("packet center outside the grid hull")
    _, duz_dz = gradient(result.u_z)
    return -duz_dz.sample(frame.r_star, 0.0)


def split_exterior_velocity(g: ScalarField, frame: PacketFrame, r0_split,
                            tol=1e-9):
    """Decompose g by a smooth radial partition about the packet center.

    The near weight equals 1 inside |X| < r0_split and 0 beyond 2 r0_split
    (local packet radius |X|^2 = x^2 + y^2).  Both parts are solved with the
    full far-field pipeline; their velocities sum to the unsplit solve by
    linearity.
    """
    if r0_split <= frame.lam:
        raise RecoveryError("split radius must exceed the packet scale")
    grid = g.grid
    margin = 2.0 * r0_split
    if (frame.r_star - margin <= grid.r_min or frame.r_star + margin >= grid.r_max
            or margin >= grid.z_max or -margin <= grid.z_min):
        raise RecoveryError("split transition region not contained in the hull")
    rr, zz = grid.mesh()
    rho = np.hypot(rr - frame.r_star, zz)
    w_near = bumps.radial_near_weight(rho, r0_split)
    g_near = ScalarField(grid, g.values * w_near, g.support)
    g_far = ScalarField(grid, g.values * (1.0 - w_near), g.support)
    return solve_recovery(g_near, tol), solve_recovery(g_far, tol)
