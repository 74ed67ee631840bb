"""Tracked-packet diagnostics: scores, defects, projections, and the master error.

All quantities live on the moving packet frame (x, y) = (r_* - r, z) at the
tracked scale lambda(t).  The active quantity is the full four-quadrant
quadrupole score

    Q = int_{|x|,|y|<lam} K_Q(x, y) G dx dy,     K_Q = xy / (x^2 + y^2)^2,

computed in polar coordinates so the kernel singularity at the center is
integrable against any G vanishing there.  A narrow diagonal sector provides
a coercive subscore.  Shape quality is measured by the wrong-sign mass and
the weighted angular deviation from the model profile xy; swirl-jet quality
by weighted projections and by a least-squares fit of the residual Taylor
jet.  The master error

    E = delta_jet + mu + R_prof + rho + eps_strain

bundles the five admissibility components.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from qel import kernel_checks
from qel.bumps import psi
from qel.fields import PacketFrame, ScalarField, gradient
from qel.quadrature import (golden_section, polar_diagonal_sectors,
                            polar_square, tensor_window)


class DiagnosticsError(RuntimeError):
    pass


def _check_window(g: ScalarField, frame: PacketFrame, half):
    grid = g.grid
    if not (grid.r_min <= frame.r_star - half and frame.r_star + half <= grid.r_max
            and grid.z_min <= -half and half <= grid.z_max):
        raise DiagnosticsError("packet window extends outside the grid hull")


def full_score(g: ScalarField, frame: PacketFrame, n_theta=20, n_radius=32,
               center_warn=1e-3):
    """Full quadrupole score over the four-quadrant packet."""
    _check_window(g, frame, frame.lam)
    rule = polar_square(frame.lam, n_theta, n_radius)
    gv = frame.sample_local(g, rule.x, rule.y)
    if center_warn is not None:
        g0 = frame.sample_local(g, np.array([0.0]), np.array([0.0]))[0]
        scale = np.max(np.abs(gv))
        if scale > 0 and abs(g0) > center_warn * scale:
            warnings.warn("packet field does not vanish at the center; "
                          "the singular-cell treatment assumes G ~ a x y")
    return float(np.sum(rule.w * rule.cos_t * rule.sin_t * gv / rule.radius))


def diagonal_subscore(g: ScalarField, frame: PacketFrame, delta_c,
                      n_theta=16, n_radius=32):
    """Same integrand restricted to the four diagonal sectors."""
    if not 0.0 < delta_c < 0.1:
        raise DiagnosticsError("delta_c must lie in (0, 1/10)")
    _check_window(g, frame, frame.lam)
    rule = polar_diagonal_sectors(frame.lam, delta_c, n_theta, n_radius)
    gv = frame.sample_local(g, rule.x, rule.y)
    return float(np.sum(rule.w * rule.cos_t * rule.sin_t * gv / rule.radius))


def _weighted_l1_deviation(rule, gv, a):
    # int W_Q |G - a xy| in polar variables
    model = a * rule.x * rule.y
    return float(np.sum(rule.w * np.abs(rule.cos_t * rule.sin_t)
                        * np.abs(gv - model) / rule.radius))


def profile_defects(g: ScalarField, frame: PacketFrame, n_theta=20, n_radius=32):
    """Sign defect, angular defect, their sum, and the ratio to the score.

    Dsign integrates the wrong-signed mass against the positive weight W_Q;
    Dang minimizes the weighted L1 distance to the profile a xy over a >= 0
    (convex in a; golden-section search per the design contract).
    """
    _check_window(g, frame, frame.lam)
    rule = polar_square(frame.lam, n_theta, n_radius)
    gv = frame.sample_local(g, rule.x, rule.y)
    cs = rule.cos_t * rule.sin_t
    dsign = float(np.sum(rule.w * np.abs(cs) * rule.radius
                         * np.maximum(-cs * gv, 0.0)))
    q = float(np.sum(rule.w * cs * gv / rule.radius))
    c_q = kernel_checks.score_constant_cached()
    a_guess = max(q / (c_q * frame.lam**2), 0.0)
    upper = 4.0 * a_guess
    if upper == 0.0:
        upper = 4.0 * (np.max(np.abs(gv)) / frame.lam**2 + 1e-300)
    a_best, dang = golden_section(lambda a: _weighted_l1_deviation(rule, gv, a),
                                  0.0, upper)
    dang = min(dang, _weighted_l1_deviation(rule, gv, 0.0))
    dprof = dsign + dang
    if q > 0.0:
        rprof = dprof / q
    else:
        rprof = math.inf
    return dsign, dang, dprof, rprof


def projected_amplitudes(g: ScalarField, gamma: ScalarField, frame: PacketFrame,
                         n_panels=4, n_gl=24):
    """Weighted projections onto the model profiles on the 2 lambda window.

    Weight w = psi(x/lam)^2 psi(y/lam)^2 with psi the fixed even bump equal
    to 1 on [-1, 1] and supported in (-2, 2).  Returns
    (a_lam, b_lam, Gamma_star, Q_lam, C_lam).
    """
    lam = frame.lam
    _check_window(g, frame, 2.0 * lam)
    rule = tensor_window(2.0 * lam, n_panels, n_gl)
    w = rule.w * psi(rule.x / lam) ** 2 * psi(rule.y / lam) ** 2
    gv = frame.sample_local(g, rule.x, rule.y)
    gam = frame.sample_local(gamma, rule.x, rule.y)
    xy = rule.x * rule.y
    xy2 = rule.x * rule.y**2
    a_lam = float(np.sum(w * gv * xy) / np.sum(w * xy * xy))
    gamma_star = float(np.sum(w * gam) / np.sum(w))
    b_lam = 2.0 * float(np.sum(w * (gam - gamma_star) * xy2)
                        / np.sum(w * xy2 * xy2))
    c_q = kernel_checks.score_constant_cached()
    return a_lam, b_lam, gamma_star, c_q * a_lam * lam**2, lam**2 * b_lam


# fourth-order stencils for the pointwise jet coefficient
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def pointwise_jet_coefficient(gamma: ScalarField, frame: PacketFrame,
                              rel_spacing=0.25):
    """Pointwise jet coefficient b = d_x d_y^2 Gamma at the packet center."""
    d = rel_spacing * frame.lam
    off = np.arange(-2.0, 3.0) * d
    xg, yg = np.meshgrid(off, off, indexing="ij")
    vals = frame.sample_local(gamma, xg, yg)
    return float(_D1 @ vals @ _D2 / (d * d * d))


def strain_error(u_r: ScalarField, u_z: ScalarField, frame: PacketFrame,
                 sigma, n_side=33):
    """Normalized deviation of the packet velocity from the pure strain.

    In local coordinates U = sigma x + R^r, V = -sigma y + R^z; returns
    max |grad (R^r, R^z)| / sigma over the packet (max over matrix entries).
    The center shift makes U(0,0) = 0 exactly, so only gradients enter.
    """
    if sigma == 0.0:
        return math.inf
    s = np.linspace(-frame.lam, frame.lam, n_side)
    xg, yg = np.meshgrid(s, s, indexing="ij")
    rg, zg = frame.from_local(xg, yg)
    dur_dr, dur_dz = gradient(u_r)
    duz_dr, duz_dz = gradient(u_z)
    # local-frame Jacobian: d/dx = -d/dr, d/dy = d/dz, U = const - u^r, V = u^z
    e11 = dur_dr.sample_many(rg, zg) - sigma
    e12 = -dur_dz.sample_many(rg, zg)
    e21 = -duz_dr.sample_many(rg, zg)
    e22 = duz_dz.sample_many(rg, zg) + sigma
    worst = max(np.max(np.abs(e)) for e in (e11, e12, e21, e22))
    return float(worst / abs(sigma))


def exterior_tail(near, far, frame: PacketFrame, sigma, n_side=33):
    """Affine-subtracted exterior velocity, normalized by sigma lambda.

    near/far are RecoveryResult objects from the split solve; only the far
    part enters.  Returns max over the packet of the residual after removing
    the affine Taylor polynomial of the far velocity at the center.
    """
    if sigma == 0.0:
        return math.inf
    lam = frame.lam
    s = np.linspace(-lam, lam, n_side)
    xg, yg = np.meshgrid(s, s, indexing="ij")
    rg, zg = frame.from_local(xg, yg)
    r0 = np.array([frame.r_star])
    z0 = np.array([0.0])
    worst = 0.0
    for comp, sign in ((far.u_r, -1.0), (far.u_z, 1.0)):
        d_dr, d_dz = gradient(comp)
        v0 = sign * comp.sample_many(r0, z0)[0]
        gx = -sign * d_dr.sample_many(r0, z0)[0]  # d/dx = -d/dr
        gy = sign * d_dz.sample_many(r0, z0)[0]
        v = sign * comp.sample_many(rg, zg)
        resid = v - (v0 + gx * xg + gy * yg)
        worst = max(worst, float(np.max(np.abs(resid))))
    return worst / (abs(sigma) * lam)


_JET_MODES = [(1, 0), (0, 1), (2, 0), (0, 2), (1, 1), (3, 0), (2, 1), (0, 3), (1, 4)]
# the fit carries the constant and the active mode so that injected off-mode
# content is not absorbed into them through non-orthogonality; only the
# off-mode coefficients enter the deviation sum
_JET_FIT_BASIS = [(0, 0), (1, 2)] + _JET_MODES


def jet_deviation_detail(gamma: ScalarField, frame: PacketFrame, b_lam,
                         gamma_star, n_panels=4, n_gl=24):
    """Weighted LSQ fit of the swirl jet on the core window.

    Fits Gamma - Gamma_* onto scaled monomials (x/lam)^p (y/lam)^q spanning
    the constant, the active mode x y^2, every mode of total degree <= 3,
    and the first neutral-tower mode x y^4.  delta_jet is the scale-weighted
    l1 mass of all modes other than the constant and the active one,
    normalized by b_lam lam^3.  Returns (delta_jet, off-mode coefficients,
    rms fit residual).
    """
    lam = frame.lam
    _check_window(gamma, frame, 2.0 * lam)
    rule = tensor_window(2.0 * lam, n_panels, n_gl)
    w = rule.w * psi(rule.x / lam) ** 2 * psi(rule.y / lam) ** 2
    gam = frame.sample_local(gamma, rule.x, rule.y)
    target = gam - gamma_star
    xs = rule.x / lam
    ys = rule.y / lam
    design = np.stack([xs**p * ys**q for p, q in _JET_FIT_BASIS], axis=1)
    sw = np.sqrt(w)
    a = design * sw[:, None]
    rhs = target * sw
    coeffs, _, rank, _ = np.linalg.lstsq(a, rhs, rcond=None)
    if rank < len(_JET_FIT_BASIS):
        raise DiagnosticsError("degenerate jet fit: singular normal equations")
    resid = rhs - a @ coeffs
    rms = float(np.sqrt(np.sum(resid**2) / np.sum(w)))
    off = coeffs[2:]
    denom = b_lam * lam**3
    if denom == 0.0:
        mass = float(np.sum(np.abs(off)))
        delta = 0.0 if mass == 0.0 and rms == 0.0 else math.inf
    else:
        delta = float(np.sum(np.abs(off)) / abs(denom))
    return delta, dict(zip(_JET_MODES, off)), rms


def jet_deviation(gamma, frame, b_lam, gamma_star, **kw):
    return jet_deviation_detail(gamma, frame, b_lam, gamma_star, **kw)[0]


@dataclass
class DiagnosticsRecord:
    """One time slice of every tracked scalar."""

    t: float
    Q: float
    Qdiag: float
    C: float
    sigma: float
    a_lam: float
    b_lam: float
    Q_lam: float
    C_lam: float
    b: float
    mu: float
    rho: float
    Rprof: float
    delta_jet: float
    eps_strain: float
    eta_ext: float
    E: float
    r_star: float
    lam: float
    Dsign: float = math.nan
    Dang: float = math.nan
    Dprof: float = math.nan


def assemble_record(t, frame: PacketFrame, *, Q, Qdiag, sigma, a_lam, b_lam,
                    Gamma_star, Q_lam, C_lam, b, Dsign, Dang, Dprof, Rprof,
                    delta_jet, eps_strain, eta_ext) -> DiagnosticsRecord:
    """Assemble one record; E is the exact sum of its five components."""
    mu = b * frame.lam**3 / Gamma_star if Gamma_star != 0.0 else math.inf
    rho = frame.lam / frame.r_star
    e = delta_jet + mu + Rprof + rho + eps_strain
    return DiagnosticsRecord(
        t=t, Q=Q, Qdiag=Qdiag, C=frame.lam**2 * b, sigma=sigma, a_lam=a_lam,
        b_lam=b_lam, Q_lam=Q_lam, C_lam=C_lam, b=b, mu=mu, rho=rho,
        Rprof=Rprof, delta_jet=delta_jet, eps_strain=eps_strain,
        eta_ext=eta_ext, E=e, r_star=frame.r_star, lam=frame.lam,
        Dsign=Dsign, Dang=Dang, Dprof=Dprof)
