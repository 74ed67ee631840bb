"""Short-time evolution of (Gamma, G) and the flat-model mode hierarchy.

The meridional system is pure transport plus a swirl source,

    D_t Gamma = 0,        D_t G = r^{-4} d_z(Gamma^2),

with the velocity recovered from G each step.  Transport is semi-Lagrangian:
characteristics are backtracked with a fixed-point midpoint rule and fields
are picked up by bicubic interpolation, which keeps the scheme stable while
the packet sharpens.  Time coupling is a two-stage midpoint (predict with the
current velocity, re-recover, correct with the averaged velocity), second
order overall; the source increment uses the half-step swirl field evaluated
at the characteristic midpoint.

The tracked frame follows

    r_*' = u^r(r_*, 0, t),        lambda' = -sigma lambda,

with lambda advanced by its exact integrating factor over the step.

A separate constant-coefficient simulator integrates the flat-model jet
hierarchy: a swirl monomial x^p y^q evolves by c_pq' = (q - p) sigma c_pq,
so the scale-weighted ratios R_pq = |c_pq| lambda^{p+q} / (b lambda^3) obey
d/dt log R_pq = 2 (1 - p) sigma: modes with p > 1 are damped and the tower
p = 1 is neutral.
"""

import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from qel import diagnostics
from qel.fields import (MeridionalGrid, PacketFrame, ScalarField,
                        VelocityField, gradient)
from qel.initial_data import DataParameters, build_initial_fields, self_entry_check
from qel.recovery import (RecoveryResult, solve_recovery, split_exterior_velocity,
                          strain_at_center)


class EvolutionError(RuntimeError):
    pass


@dataclass
class EvolutionState:
    t: float
    G: ScalarField
    Gamma: ScalarField
    frame: PacketFrame
    velocity: VelocityField | None = None
    recovery: RecoveryResult | None = None
    sigma: float | None = None


def recover_state(state: EvolutionState, tol=1e-9) -> EvolutionState:
    """Fill the velocity cache of a state by solving the elliptic recovery."""
    if state.velocity is not None:
        return state
    res = solve_recovery(state.G, tol)
    grid = state.G.grid
    r_col = grid.r()[:, None]
    u_theta = ScalarField(grid, state.Gamma.values / r_col)
    state.velocity = VelocityField(res.u_r, res.u_z, u_theta)
    state.recovery = res
    state.sigma = strain_at_center(res, state.frame)
    return state


def _field_evaluators(u_r, u_z):
    if callable(u_r):
        return u_r, u_z
    return u_r.sample_many, u_z.sample_many


def _departure_points(rr, zz, eval_ur, eval_uz, dt, iters=2):
    """Backtracked departure points: D = X - dt u((X + D)/2)."""
    dr_ = dt * eval_ur(rr, zz)
    dz_ = dt * eval_uz(rr, zz)
    for _ in range(iters):
        rm = rr - 0.5 * dr_
        zm = zz - 0.5 * dz_
        dr_ = dt * eval_ur(rm, zm)
        dz_ = dt * eval_uz(rm, zm)
    return rr - dr_, zz - dz_


def _swirl_source(gamma_vals, grid):
    """r^{-4} d_z(Gamma^2) on the grid (fourth-order derivative)."""
    sq = ScalarField(grid, gamma_vals**2)
    _, dsq_dz = gradient(sq)
    dvals = dsq_dz.values
    # stencil cancellation noise on plateaus of Gamma^2 is below
    # eps * |Gamma^2| / dz; genuine sources sit many orders above it
    floor = 1e-13 * np.max(np.abs(sq.values)) / grid.dz
    dvals[np.abs(dvals) < floor] = 0.0
    r_col = grid.r()[:, None]
    return dvals / r_col**4


def _max_speed(eval_ur, eval_uz, grid):
    rr, zz = grid.mesh()
    return max(np.max(np.abs(eval_ur(rr, zz))), np.max(np.abs(eval_uz(rr, zz))))


def _check_cfl(dt, eval_ur, eval_uz, grid, cfl=0.5):
    speed = _max_speed(eval_ur, eval_uz, grid)
    h = min(grid.dr, grid.dz)
    if dt * speed / h > cfl * (1.0 + 1e-12):
        raise EvolutionError(
            f"CFL violation: dt max|u|/h = {dt * speed / h:.3f} > {cfl}")


def _sigma_from_fields(u_z_vals, grid, r_star):
    _, duz_dz = gradient(ScalarField(grid, u_z_vals))
    return -duz_dz.sample(r_star, 0.0)


def advance_frame(frame: PacketFrame, dt, sigma, eval_ur) -> PacketFrame:
    """Track the center along u^r (midpoint rule) and shrink the scale.

    lambda uses the exact integrating factor for the frozen step strain.
    """
    z0 = np.zeros(1)
    ur0 = float(eval_ur(np.array([frame.r_star]), z0)[0])
    r_mid = frame.r_star + 0.5 * dt * ur0
    ur_mid = float(eval_ur(np.array([r_mid]), z0)[0])
    return PacketFrame(frame.r_star + dt * ur_mid,
                       frame.lam * math.exp(-sigma * dt),
                       frame.t + dt)


def step(state: EvolutionState, dt, *, tol=1e-9, velocity=None,
         source=True, cfl=0.5, sigma_override=None) -> EvolutionState:
    """Advance one time step.

    With velocity=None the meridional velocity is recovered from G (twice:
    predictor and midpoint corrector).  A (u_r, u_z) pair of fields or
    callables freezes the velocity instead, which is the flat-model test
    path; source=False drops the swirl source.
    """
    if dt <= 0:
        raise EvolutionError("dt must be positive")
    grid = state.G.grid
    rr, zz = grid.mesh()

    if velocity is not None:
        eval_ur, eval_uz = _field_evaluators(*velocity)
        _check_cfl(dt, eval_ur, eval_uz, grid, cfl)
        if sigma_override is not None:
            sigma_mid = sigma_override
        else:
            sigma_mid = _sigma_from_fields(eval_uz(rr, zz), grid, state.frame.r_star)
    else:
        state = recover_state(state, tol)
        u0r, u0z = state.velocity.u_r, state.velocity.u_z
        eval_ur0, eval_uz0 = _field_evaluators(u0r, u0z)
        _check_cfl(dt, eval_ur0, eval_uz0, grid, cfl)
        # predictor: transport with the frozen velocity, source at old time
        dep_r, dep_z = _departure_points(rr, zz, eval_ur0, eval_uz0, dt)
        g_pred = state.G.sample_many(dep_r, dep_z)
        if source:
            s0 = ScalarField(grid, _swirl_source(state.Gamma.values, grid))
            g_pred = g_pred + dt * s0.sample_many(dep_r, dep_z)
        res1 = solve_recovery(ScalarField(grid, g_pred), tol)
        # midpoint velocity for the corrector
        ur_mid = 0.5 * (u0r.values + res1.u_r.values)
        uz_mid = 0.5 * (u0z.values + res1.u_z.values)
        eval_ur = ScalarField(grid, ur_mid).sample_many
        eval_uz = ScalarField(grid, uz_mid).sample_many
        sigma_mid = _sigma_from_fields(uz_mid, grid, state.frame.r_star)

    dep_r, dep_z = _departure_points(rr, zz, eval_ur, eval_uz, dt)
    gamma_new = state.Gamma.sample_many(dep_r, dep_z)
    g_new = state.G.sample_many(dep_r, dep_z)
    if source:
        hr, hz = _departure_points(rr, zz, eval_ur, eval_uz, 0.5 * dt)
        gamma_half = state.Gamma.sample_many(hr, hz)
        s_half = ScalarField(grid, _swirl_source(gamma_half, grid))
        g_new = g_new + dt * s_half.sample_many(0.5 * (rr + dep_r),
                                                0.5 * (zz + dep_z))
    frame_new = advance_frame(state.frame, dt, sigma_mid, eval_ur)
    return EvolutionState(state.t + dt, ScalarField(grid, g_new),
                          ScalarField(grid, gamma_new), frame_new)


def compute_record(state: EvolutionState, *, delta_c=0.05, split_factor=4.0,
                   tol=1e-9, with_exterior=True) -> diagnostics.DiagnosticsRecord:
    """Full diagnostics of one state (recovers the velocity if needed)."""
    state = recover_state(state, tol)
    frame = state.frame
    g, gamma = state.G, state.Gamma
    q = diagnostics.full_score(g, frame)
    qdiag = diagnostics.diagonal_subscore(g, frame, delta_c)
    dsign, dang, dprof, rprof = diagnostics.profile_defects(g, frame)
    a_lam, b_lam, gamma_star, q_lam, c_lam = diagnostics.projected_amplitudes(
        g, gamma, frame)
    b = diagnostics.pointwise_jet_coefficient(gamma, frame)
    sigma = state.sigma
    eps = diagnostics.strain_error(state.velocity.u_r, state.velocity.u_z,
                                   frame, sigma)
    djet = diagnostics.jet_deviation(gamma, frame, b_lam, gamma_star)
    eta = 0.0
    if with_exterior:
        near, far = split_exterior_velocity(g, frame, split_factor * frame.lam, tol)
        eta = diagnostics.exterior_tail(near, far, frame, sigma)
    return diagnostics.assemble_record(
        state.t, frame, Q=q, Qdiag=qdiag, sigma=sigma, a_lam=a_lam,
        b_lam=b_lam, Gamma_star=gamma_star, Q_lam=q_lam, C_lam=c_lam, b=b,
        Dsign=dsign, Dang=dang, Dprof=dprof, Rprof=rprof, delta_jet=djet,
        eps_strain=eps, eta_ext=eta)


_E_COMPONENTS = ("delta_jet", "mu", "Rprof", "rho", "eps_strain")


@dataclass
class RunResult:
    records: list
    final_state: EvolutionState
    exit_reason: str
    exit_component: str | None = None


def run(params: DataParameters, grid: MeridionalGrid, *, t_final=40.0,
        dt_max=0.5, record_interval=1, tol=1e-9, e_cap=1.0, delta_c=0.05,
        split_factor=4.0, sigma_t_cap=None, sigma_dt_cap=0.1, cfl=0.5,
        dt_floor=1e-9, require_self_entry=True, with_exterior=True,
        max_steps=100_000) -> RunResult:
    """Evolve the explicit datum and emit diagnostics records.

    Halts on the first of: t_final reached, master error E above e_cap (the
    exit component names the largest contributor), frame invalidation,
    sigma(t) * t above sigma_t_cap (if set), or a collapsed CFL step.
    """
    g0, gamma0 = build_initial_fields(params, grid)
    report = self_entry_check(params, g0, gamma0, tol)
    if not report.ok:
        msg = "self-entry check failed: " + "; ".join(report.violations or
                                                      ["source dominance violated"])
        if require_self_entry:
            raise EvolutionError(msg)
        warnings.warn(msg)
    state = EvolutionState(0.0, g0, gamma0, PacketFrame(params.r0, params.lambda0, 0.0))
    records = []
    exit_reason = "max_steps"
    exit_component = None
    for istep in range(max_steps):
        state = recover_state(state, tol)
        if istep % record_interval == 0:
            rec = compute_record(state, delta_c=delta_c, split_factor=split_factor,
                                 tol=tol, with_exterior=with_exterior)
            records.append(rec)
            if rec.E >= e_cap:
                exit_reason = "E_cap"
                parts = {k: getattr(rec, k) for k in _E_COMPONENTS}
                exit_component = max(parts, key=parts.get)
                break
        if not state.frame.valid:
            exit_reason = "frame"
            break
        if sigma_t_cap is not None and state.sigma * state.t >= sigma_t_cap:
            exit_reason = "sigma_t_cap"
            break
        if state.t >= t_final:
            exit_reason = "t_final"
            break
        eval_ur, eval_uz = _field_evaluators(state.velocity.u_r, state.velocity.u_z)
        speed = _max_speed(eval_ur, eval_uz, grid)
        dt = dt_max
        if speed > 0:
            dt = min(dt, cfl * min(grid.dr, grid.dz) / speed)
        if state.sigma and state.sigma > 0:
            dt = min(dt, sigma_dt_cap / state.sigma)
        dt = min(dt, max(t_final - state.t, dt_floor))
        if dt < dt_floor:
            exit_reason = "cfl_floor"
            break
        state = step(state, dt, tol=tol, cfl=cfl)
    return RunResult(records, state, exit_reason, exit_component)


# ---------------------------------------------------------------------------
# flat-model jet-hierarchy simulator

_DEFAULT_MODES = ((1, 2), (1, 4), (1, 6), (2, 2), (3, 2))


@dataclass
class ModeState:
    """Strain, scale, and swirl Taylor coefficients for the flat model."""

    sigma: float
    lam: float
    coefficients: dict = field(default_factory=lambda: {m: 1.0 for m in _DEFAULT_MODES})

    @property
    def b(self):
        return self.coefficients[(1, 2)]

    def ratios(self):
        b3 = abs(self.b) * self.lam**3
        return {pq: abs(c) * self.lam ** (pq[0] + pq[1]) / b3
                for pq, c in self.coefficients.items()}


@dataclass
class ModeTrajectory:
    ts: np.ndarray
    lam: np.ndarray
    coefficients: dict
    ratios: dict


def mode_simulate(m: ModeState, t_final, dt) -> ModeTrajectory:
    """Integrate c_pq' = (q - p) sigma c_pq with lambda' = -sigma lambda."""
    if (1, 2) not in m.coefficients:
        raise ValueError("mode set must include the active mode (1, 2)")
    if dt * abs(m.sigma) > 0.1:
        raise ValueError("dt sigma must not exceed 0.1")
    modes = sorted(m.coefficients)
    y0 = np.array([m.lam] + [m.coefficients[pq] for pq in modes])
    rates = np.array([0.0] + [float(q - p) for p, q in modes])

    def rhs(t, y):
        out = rates * y * m.sigma
        out[0] = -m.sigma * y[0]
        return out

    ts = np.arange(0.0, t_final + 0.5 * dt, dt)
    sol = solve_ivp(rhs, (0.0, ts[-1]), y0, t_eval=ts, rtol=1e-11, atol=1e-14,
                    max_step=dt)
    if not sol.success:
        raise RuntimeError(f"mode integration failed: {sol.message}")
    lam = sol.y[0]
    coeffs = {pq: sol.y[1 + k] for k, pq in enumerate(modes)}
    b3 = np.abs(coeffs[(1, 2)]) * lam**3
    ratios = {pq: np.abs(c) * lam ** (pq[0] + pq[1]) / b3
              for pq, c in coeffs.items()}
    return ModeTrajectory(sol.t, lam, coeffs, ratios)


# ---------------------------------------------------------------------------
# checkpoint format "QEL1": header, parameter block, row-major float64 fields

_MAGIC = b"QEL1"


def _pack_support(support):
    if support is None:
        return struct.pack("<4d", math.nan, math.nan, math.nan, math.nan)
    return struct.pack("<4d", *support)


def _unpack_support(raw):
    vals = struct.unpack("<4d", raw)
    if any(math.isnan(v) for v in vals):
        return None
    return tuple(vals)


def write_checkpoint(path, state: EvolutionState, params: dict | None = None):
    """Self-describing binary snapshot of (t, fields, frame)."""
    grid = state.G.grid
    params = params or {}
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", grid.n_r, grid.n_z))
        fh.write(struct.pack("<4d", grid.r_min, grid.r_max, grid.z_min, grid.z_max))
        fh.write(struct.pack("<3d", state.t, state.frame.r_star, state.frame.lam))
        fh.write(_pack_support(state.G.support))
        fh.write(_pack_support(state.Gamma.support))
        fh.write(struct.pack("<I", len(params)))
        for key, value in params.items():
            raw = key.encode()
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<d", float(value)))
        fh.write(np.ascontiguousarray(state.G.values, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.Gamma.values, dtype="<f8").tobytes())


def read_checkpoint(path):
    """Inverse of write_checkpoint; returns (EvolutionState, params dict)."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise EvolutionError(f"{path}: not a QEL1 checkpoint")
        n_r, n_z = struct.unpack("<II", fh.read(8))
        r_min, r_max, z_min, z_max = struct.unpack("<4d", fh.read(32))
        t, r_star, lam = struct.unpack("<3d", fh.read(24))
        sup_g = _unpack_support(fh.read(32))
        sup_gamma = _unpack_support(fh.read(32))
        (n_params,) = struct.unpack("<I", fh.read(4))
        params = {}
        for _ in range(n_params):
            (klen,) = struct.unpack("<H", fh.read(2))
            key = fh.read(klen).decode()
            (params[key],) = struct.unpack("<d", fh.read(8))
        grid = MeridionalGrid(r_min, r_max, z_min, z_max, n_r, n_z)
        count = n_r * n_z
        g_vals = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(n_r, n_z)
        gamma_vals = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(n_r, n_z)
    state = EvolutionState(t, ScalarField(grid, g_vals.copy(), sup_g),
                           ScalarField(grid, gamma_vals.copy(), sup_gamma),
                           PacketFrame(r_star, lam, t))
    return state, params
