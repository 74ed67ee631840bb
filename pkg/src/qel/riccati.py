"""Comparison ODE system for the amplification loop and its blow-up time.

The packet dynamics is compared against

    Q' = c C,      C' = c Q C,           (coupled extremal flow)

together with source dominance C >= kappa Q^2.  Substituting dominance into
the first equation closes the scalar Riccati flow Q' = c kappa Q^2, whose
solution Q0 / (1 - c kappa Q0 t) diverges at exactly 1 / (c kappa Q0); any
trajectory maintaining all three inequalities blows up no later.  Dominance
is self-maintained along the coupled flow when kappa < c / (4 C0) with C0
the Dini upper constant (equal to c for the extremal flow), which is where
the strict form of the bound is asserted.

Blow-up detection integrates adaptively until Q exceeds a large threshold
and extrapolates 1/Q, which is asymptotically affine in t for
Riccati-dominated growth.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp


class ComparisonError(RuntimeError):
    pass


@dataclass
class ComparisonState:
    Q: float
    C: float
    c: float
    kappa: float

    def validate(self):
        if self.Q <= 0.0:
            raise ComparisonError("need Q(0) > 0")
        if self.c <= 0.0 or self.kappa <= 0.0:
            raise ComparisonError("need positive constants c, kappa")
        if self.C < self.kappa * self.Q**2:
            raise ComparisonError("invalid initial dominance: C(0) < kappa Q(0)^2")


@dataclass
class RiccatiResult:
    ts: np.ndarray
    Qs: np.ndarray
    Cs: np.ndarray
    blowup_time: float
    bound: float
    bound_satisfied: bool
    dominance_margin_min: float
    system: str


_Q_BLOWUP = 1e12


def integrate(s0: ComparisonState, t_max, rtol=1e-10, system="coupled",
              check_bound=True) -> RiccatiResult:
    """Integrate the comparison flow and estimate its blow-up time.

    system="coupled" integrates (Q, C) with the equality extremal flow;
    system="scalar" integrates the dominance-closed Riccati equation
    Q' = c kappa Q^2 (with C slaved to kappa Q^2).  The blow-up estimate is
    asserted against the bound 1/(c kappa Q0) where that bound is a theorem:
    always for the scalar flow, and for the coupled flow when
    kappa < c/4 (dominance then persists); otherwise it is only reported.
    """
    s0.validate()
    c, kappa = s0.c, s0.kappa

    if system == "coupled":
        def rhs(t, y):
            return [c * y[1], c * y[0] * y[1]]
        y0 = [s0.Q, s0.C]
    elif system == "scalar":
        def rhs(t, y):
            return [c * kappa * y[0] ** 2, 2.0 * c * kappa * y[0] * y[1]]
        y0 = [s0.Q, s0.kappa * s0.Q**2]
    else:
        raise ValueError(f"unknown system {system!r}")

    def hit_blowup(t, y):
        return y[0] - _Q_BLOWUP

    hit_blowup.terminal = True
    hit_blowup.direction = 1.0

    sol = solve_ivp(rhs, (0.0, t_max), y0, rtol=rtol, atol=1e-300,
                    events=hit_blowup, dense_output=True, max_step=t_max / 16.0)
    if not sol.success:
        raise ComparisonError(f"integration failed: {sol.message}")

    bound = 1.0 / (c * kappa * s0.Q)
    if sol.t_events[0].size == 0:
        ts = sol.t
        qs, cs = sol.y
        return RiccatiResult(ts, qs, cs, math.inf, bound, math.inf <= bound,
                             float(np.min(cs - kappa * qs**2)), system)

    t_end = float(sol.t_events[0][0])
    # sample the last decade of growth and extrapolate 1/Q linearly
    lo, hi = 0.0, t_end
    target = _Q_BLOWUP / 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sol.sol(mid)[0] < target:
            lo = mid
        else:
            hi = mid
    ts = np.linspace(lo, t_end, 256)
    qs = sol.sol(ts)[0]
    slope, intercept = np.polyfit(ts, 1.0 / qs, 1)
    blowup_time = float(-intercept / slope)

    if sol.t[-1] == t_end:
        t_full, y_full = sol.t, sol.y
    else:
        t_full = np.append(sol.t, t_end)
        y_full = np.hstack([sol.y, sol.y_events[0][0][:, None]])
    qs_full, cs_full = y_full
    margin = float(np.min(cs_full - kappa * qs_full**2))
    ok = blowup_time <= bound * (1.0 + 50.0 * rtol + 1e-6)
    theorem_regime = system == "scalar" or kappa < 0.25 * c
    if check_bound and theorem_regime and not ok:
        raise ComparisonError(
            f"blow-up estimate {blowup_time:.6g} violates the bound {bound:.6g}")
    if not ok:
        warnings.warn("blow-up estimate exceeds 1/(c kappa Q0); start is outside "
                      "the dominance-persistence regime")
    return RiccatiResult(t_full, qs_full, cs_full, blowup_time, bound, ok,
                         margin, system)


@dataclass
class FitResult:
    c_lower: float
    C0_upper: float
    kappa_max: float
    dominance_ok: bool
    degenerate: bool


def fit_constants(records) -> FitResult:
    """Measure the Dini band Q'/C from a diagnostics series.

    Difference quotients between consecutive records are normalized by the
    midpoint C; kappa_max = c_lower / (4 C0_upper) is the largest dominance
    constant allowed by the measured band, and the series is re-checked
    against C >= kappa_max Q^2.
    """
    recs = [r for r in records if r.C > 0.0]
    if len(recs) < 10:
        raise ComparisonError("need at least 10 records with C > 0")
    t = np.array([r.t for r in recs])
    q = np.array([r.Q for r in recs])
    cc = np.array([r.C for r in recs])
    ratios = np.diff(q) / (np.diff(t) * 0.5 * (cc[1:] + cc[:-1]))
    c_lower = float(np.min(ratios))
    c0_upper = float(np.max(ratios))
    degenerate = not (c_lower > 0.0 and np.isfinite(c0_upper))
    kappa_max = 0.0 if degenerate else c_lower / (4.0 * c0_upper)
    dominance = bool(np.all(cc >= kappa_max * q**2)) and not degenerate
    return FitResult(c_lower, c0_upper, kappa_max, dominance, degenerate)
