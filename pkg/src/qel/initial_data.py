"""Explicit smooth compactly supported quadrupole data and self-entry checks.

The datum places a quadrupole vorticity packet and a swirl jet at an interior
radius r0, far from the axis:

    G0     = a0 * x * y * cut(x, y),
    Gamma0 = cut(x, y) * (Gamma_*0 + (1/2) b0 * x * y^2),

in local packet coordinates x = r0 - r, y = z (see qel.fields for the
orientation convention), with cut the tensor bump equal to 1 on the core
|x|, |y| <= 2 lambda0 and supported in |x|, |y| < 4 lambda0.  The jet
amplitude is slaved to the quadrupole amplitude by b0 = A_b a0^2 lambda0^2.

On the core the profiles are exact polynomials, so the sign and angular
profile defects vanish there and the neutral jet tower x y^{2k}, k >= 2, is
absent at the center.
"""

from dataclasses import dataclass

import numpy as np

from qel import diagnostics, recovery
from qel.bumps import chi
from qel.fields import MeridionalGrid, PacketFrame, ScalarField


@dataclass
class DataParameters:
    """Free parameters of the explicit datum, with derived b0.

    Smallness requirements (checked by validate):
      lambda0 / r0 <= epsilon0          packet far from the axis
      A_b a0^2 lambda0^5 <= epsilon0 Gamma_star0   source-shape smallness
    """

    r0: float = 1.0
    lambda0: float = 0.05
    a0: float = 20.0
    Gamma_star0: float = 1.0
    A_b: float = 64.0
    epsilon0: float = 0.05
    kappa: float = 0.125

    @property
    def b0(self):
        return self.A_b * self.a0**2 * self.lambda0**2

    def validate(self):
        violations = []
        if not (self.r0 > 0 and self.lambda0 > 0 and self.Gamma_star0 > 0
                and self.A_b > 0 and self.epsilon0 > 0 and self.kappa > 0):
            violations.append("positivity: r0, lambda0, Gamma_star0, A_b, epsilon0, kappa > 0")
        if self.lambda0 / self.r0 > self.epsilon0:
            violations.append(
                f"lambda0/r0 = {self.lambda0 / self.r0:.4g} exceeds epsilon0 = {self.epsilon0:.4g}")
        if self.A_b * self.a0**2 * self.lambda0**5 > self.epsilon0 * self.Gamma_star0:
            violations.append(
                f"A_b a0^2 lambda0^5 = {self.A_b * self.a0**2 * self.lambda0**5:.4g} "
                f"exceeds epsilon0 Gamma_star0 = {self.epsilon0 * self.Gamma_star0:.4g}")
        return violations


def cutoff(x, y, lambda0):
    """Tensor data cutoff: 1 on the core, 0 outside the 4 lambda0 window."""
    if lambda0 <= 0:
        raise ValueError("lambda0 must be positive")
    return chi(np.asarray(x, dtype=float) / lambda0) * chi(np.asarray(y, dtype=float) / lambda0)


def build_initial_fields(p: DataParameters, grid: MeridionalGrid):
    """Sample (G0, Gamma0) on the grid; support window is the 4 lambda0 box."""
    violations = p.validate()
    if violations:
        raise ValueError("invalid data parameters: " + "; ".join(violations))
    s = 4.0 * p.lambda0
    if not (grid.r_min < p.r0 - s and p.r0 + s < grid.r_max
            and grid.z_min < -s and s < grid.z_max):
        raise ValueError("data support window not strictly inside the grid hull")
    rr, zz = grid.mesh()
    x = p.r0 - rr
    y = zz
    cut = cutoff(x, y, p.lambda0)
    g0 = p.a0 * x * y * cut
    gamma0 = cut * (p.Gamma_star0 + 0.5 * p.b0 * x * y**2)
    support = (p.r0 - s, p.r0 + s, -s, s)
    return (ScalarField(grid, g0, support), ScalarField(grid, gamma0, support))


@dataclass
class SelfEntryReport:
    Q0: float
    C0: float
    mu0: float
    rho0: float
    Dsign0: float
    Dang0: float
    source_dominance_ok: bool
    E0: float
    b0_measured: float
    sigma0: float
    eps_strain0: float
    delta_jet0: float
    Rprof0: float
    violations: list

    @property
    def ok(self):
        return not self.violations and self.source_dominance_ok


def self_entry_check(p: DataParameters, g0: ScalarField, gamma0: ScalarField,
                     tol=1e-9) -> SelfEntryReport:
    """Measure the entry quantities of the datum at t = 0.

    Everything is measured from the sampled fields (score quadrature,
    pointwise jet stencil, recovered strain), not from the parameters, so the
    report doubles as a pipeline check: mu0 must reproduce the arithmetic
    value A_b a0^2 lambda0^5 / Gamma_star0 and the core defects must vanish.
    """
    frame = PacketFrame(p.r0, p.lambda0, 0.0)
    q0 = diagnostics.full_score(g0, frame)
    b_meas = diagnostics.pointwise_jet_coefficient(gamma0, frame)
    c0 = frame.lam**2 * b_meas
    gamma_ref = p.Gamma_star0
    mu0 = b_meas * frame.lam**3 / gamma_ref
    rho0 = frame.lam / frame.r_star
    dsign, dang, dprof, rprof = diagnostics.profile_defects(g0, frame)
    res = recovery.solve_recovery(g0, tol)
    sigma0 = recovery.strain_at_center(res, frame)
    eps0 = diagnostics.strain_error(res.u_r, res.u_z, frame, sigma0)
    a_lam, b_lam, gamma_star, _, _ = diagnostics.projected_amplitudes(g0, gamma0, frame)
    djet = diagnostics.jet_deviation(gamma0, frame, b_lam, gamma_star)
    e0 = djet + mu0 + rprof + rho0 + eps0
    dominance = c0 >= p.kappa * q0**2
    return SelfEntryReport(
        Q0=q0, C0=c0, mu0=mu0, rho0=rho0, Dsign0=dsign, Dang0=dang,
        source_dominance_ok=dominance, E0=e0, b0_measured=b_meas,
        sigma0=sigma0, eps_strain0=eps0, delta_jet0=djet, Rprof0=rprof,
        violations=p.validate())
