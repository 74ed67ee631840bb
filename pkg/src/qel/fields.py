"""Meridional grids, sampled scalar fields, and the tracked packet frame.

Conventions
-----------
The meridional plane carries coordinates (r, z) with r strictly positive:
the construction lives away from the symmetry axis and grids with
r_min <= 0 are rejected.  Fields are node samples on a uniform tensor grid,
values[i, j] at (r_i, z_j).  Off-grid lookups use bicubic (tensor cubic
Lagrange) interpolation inside the hull and return 0 outside the declared
support, consistent with compactly supported data.

Local packet coordinates are

    x = r_*(t) - r,        y = z,

i.e. x increases toward the axis.  This orientation is chosen so that a
quadrupole packet G = a x y with a > 0 produces a positive hyperbolic strain
sigma = -dz u^z at the tracked center; with the opposite orientation the
recovered strain changes sign and the amplification loop does not close.
"""

from dataclasses import dataclass, field

import numpy as np

from qel import backend


@dataclass(frozen=True)
class MeridionalGrid:
    """Uniform tensor grid on [r_min, r_max] x [z_min, z_max]."""

    r_min: float
    r_max: float
    z_min: float
    z_max: float
    n_r: int
    n_z: int

    def __post_init__(self):
        if self.r_min <= 0.0:
            raise ValueError("grid must stay off the axis: r_min > 0 required")
        if self.r_max <= self.r_min or self.z_max <= self.z_min:
            raise ValueError("degenerate grid extents")
        if self.n_r < 8 or self.n_z < 8:
            raise ValueError("need at least 8 nodes per axis")

    @property
    def dr(self):
        return (self.r_max - self.r_min) / (self.n_r - 1)

    @property
    def dz(self):
        return (self.z_max - self.z_min) / (self.n_z - 1)

    def r(self):
        return np.linspace(self.r_min, self.r_max, self.n_r)

    def z(self):
        return np.linspace(self.z_min, self.z_max, self.n_z)

    def mesh(self):
        return np.meshgrid(self.r(), self.z(), indexing="ij")


@dataclass
class ScalarField:
    """Grid-sampled scalar with bicubic off-grid lookup.

    support: optional (r_lo, r_hi, z_lo, z_hi) window; samples outside it are
    exactly 0.  Defaults to the grid hull.
    """

    grid: MeridionalGrid
    values: np.ndarray
    support: tuple | None = None

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_r, self.grid.n_z):
            raise ValueError("field shape does not match grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def sample_many(self, rq, zq):
        rq = np.ascontiguousarray(rq, dtype=float)
        zq = np.ascontiguousarray(zq, dtype=float)
        shape = rq.shape
        rq = rq.ravel()
        zq = zq.ravel()
        out = np.empty(rq.shape)
        g = self.grid
        backend.bicubic_many(self.values, g.r_min, g.z_min, g.dr, g.dz,
                             g.r_max, g.z_max, rq, zq, out)
        if self.support is not None:
            r_lo, r_hi, z_lo, z_hi = self.support
            outside = (rq < r_lo) | (rq > r_hi) | (zq < z_lo) | (zq > z_hi)
            out[outside] = 0.0
        return out.reshape(shape)

    def sample(self, r, z):
        return float(self.sample_many(np.array([r]), np.array([z]))[0])


# fourth-order first-derivative stencils (interior centered, edges one-sided)
_C4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_E0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_E1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def _deriv4(values, h, axis):
    v = np.moveaxis(values, axis, 0)
    n = v.shape[0]
    if n < 5:
        raise ValueError("grid too small for fourth-order differences")
    d = np.empty_like(v)
    d[2:-2] = (_C4[0] * v[:-4] + _C4[1] * v[1:-3] + _C4[3] * v[3:-1]
               + _C4[4] * v[4:])
    d[0] = np.tensordot(_E0, v[:5], axes=(0, 0))
    d[1] = np.tensordot(_E1, v[:5], axes=(0, 0))
    d[-1] = -np.tensordot(_E0, v[-5:][::-1], axes=(0, 0))
    d[-2] = -np.tensordot(_E1, v[-5:][::-1], axes=(0, 0))
    return np.moveaxis(d, 0, axis) / h


def gradient(f: ScalarField):
    """Return (d/dr, d/dz) of a field as two new fields.

    Fourth-order centered differences in the interior, one-sided at edges.
    Derivatives inherit the parent's support window.
    """
    dr_vals = _deriv4(f.values, f.grid.dr, axis=0)
    dz_vals = _deriv4(f.values, f.grid.dz, axis=1)
    return (ScalarField(f.grid, dr_vals, f.support),
            ScalarField(f.grid, dz_vals, f.support))


@dataclass
class PacketFrame:
    """Tracked packet center r_*, scale lambda, and time."""

    r_star: float
    lam: float
    t: float = 0.0

    def __post_init__(self):
        if self.r_star <= 0.0 or self.lam <= 0.0:
            raise ValueError("frame requires r_star > 0 and lambda > 0")

    @property
    def valid(self):
        # the frame only makes sense while the packet is interior
        return self.lam / self.r_star < 0.5

    def to_local(self, r, z):
        """Grid point -> local packet coordinates (x, y) = (r_* - r, z)."""
        return self.r_star - np.asarray(r, dtype=float), np.asarray(z, dtype=float)

    def from_local(self, x, y):
        """Local packet coordinates -> grid point (r, z) = (r_* - x, y)."""
        return self.r_star - np.asarray(x, dtype=float), np.asarray(y, dtype=float)

    def sample_local(self, f: ScalarField, x, y):
        r, z = self.from_local(x, y)
        return f.sample_many(r, z)


@dataclass
class VelocityField:
    """Meridional components plus swirl, all on one grid."""

    u_r: ScalarField
    u_z: ScalarField
    u_theta: ScalarField | None = None


def constant_field(grid: MeridionalGrid, value: float, support=None):
    return ScalarField(grid, np.full((grid.n_r, grid.n_z), float(value)), support)


def field_from_function(grid: MeridionalGrid, fn, support=None):
    """Sample fn(R, Z) on the grid mesh."""
    rr, zz = grid.mesh()
    return ScalarField(grid, np.asarray(fn(rr, zz), dtype=float), support)
