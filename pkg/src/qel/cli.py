"""Batch command-line interface.

Subcommands:
  verify-kernel   static kernel constants, parity, and source-expansion checks
  make-data       build the explicit datum, write checkpoint + entry report
  self-entry      print the entry report, exit 1 on violated inequalities
  evolve          run the short-time evolution, write series CSV + checkpoint
  compare-ode     integrate the comparison flow, from config or a series CSV
  report          render Q, C, error-component, and 1/Q plots from a CSV

Exit status: 0 success, 1 check failure, 2 usage errors.  Flags mirror the
configuration keys (--section-key); file values override defaults and flags
override the file.  QEL_OUTPUT_DIR overrides the output directory.
"""

import argparse
import dataclasses
import math
import os
import sys

import numpy as np

import qel
from qel import evolution, kernel_checks, riccati, series
from qel.config import ConfigError, RunConfig
from qel.initial_data import build_initial_fields, self_entry_check


def _add_config_flags(parser):
    parser.add_argument("--config", metavar="FILE", help="configuration file")
    for f in dataclasses.fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        parser.add_argument(flag, dest=f.name, metavar=f.type.__name__.upper(),
                            help=argparse.SUPPRESS)


def _resolve_config(args):
    overrides = {}
    for f in dataclasses.fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            overrides[RunConfig._field_key(f.name)] = val
    return RunConfig.from_layers(getattr(args, "config", None), overrides)


def _outdir(cfg):
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg.output_dir


def _print_check(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f"  {detail}" if detail else ""))
    return ok


def cmd_verify_kernel(cfg):
    closed_form = 8.0 * math.pi / 15.0
    c_tan = kernel_checks.tangential_constant()
    ok = _print_check("tangential constant", abs(c_tan - closed_form) <= 5e-10 * closed_form,
                      f"C_tan = {c_tan:.12g} (closed form {closed_form:.12g})")
    c_q1 = kernel_checks.score_constant(1.0)
    c_q2 = kernel_checks.score_constant(2.0)
    ok &= _print_check("score constant scale invariance",
                       c_q1 > 0 and abs(c_q1 / c_q2 - 1.0) <= 1e-10,
                       f"c_Q = {c_q1:.12g}")
    mc, se = kernel_checks.score_constant_mc(1.0, 2_000_000, cfg.output_seed)
    ok &= _print_check("score constant vs Monte Carlo",
                       abs(mc - c_q1) <= 3.0 * se,
                       f"MC = {mc:.6g} +- {se:.2g}")
    m, sigma = kernel_checks.parity_table(cfg.data_a0, lam=cfg.data_lambda0, n=129)
    off = max(abs(m[0, 1]), abs(m[1, 0]))
    ok &= _print_check("parity: diagonal strain with positive sigma",
                       sigma > 0 and off / abs(sigma) <= 1e-4,
                       f"sigma = {sigma:.6g}, off-diagonal/sigma = {off / abs(sigma):.2e}")
    p = cfg.data_parameters()
    err = kernel_checks.source_expansion_check(p.b0, p.Gamma_star0, p.lambda0,
                                               p.r0, freeze_radial=True)
    bound = p.b0 * p.lambda0**3 / p.Gamma_star0
    ok &= _print_check("source expansion (flat-model identity)",
                       err <= bound * (1.0 + 1e-9),
                       f"max normalized error = {err:.3e} (identity bound {bound:.3e})")
    return 0 if ok else 1


def cmd_make_data(cfg):
    out = _outdir(cfg)
    p = cfg.data_parameters()
    grid = cfg.grid()
    g0, gamma0 = build_initial_fields(p, grid)
    rep = self_entry_check(p, g0, gamma0, cfg.solver_recovery_tol)
    state = evolution.EvolutionState(0.0, g0, gamma0,
                                     qel.fields.PacketFrame(p.r0, p.lambda0, 0.0))
    ckpt = os.path.join(out, "data.qel")
    evolution.write_checkpoint(ckpt, state, {"a0": p.a0, "lambda0": p.lambda0,
                                             "r0": p.r0, "A_b": p.A_b,
                                             "Gamma_star0": p.Gamma_star0})
    report_path = os.path.join(out, "self-entry.txt")
    with open(report_path, "w") as fh:
        fh.write(_entry_report_text(p, rep))
    cfg.write_manifest(os.path.join(out, "run-manifest.txt"),
                       {"command": "make-data"})
    print(f"wrote {ckpt} and {report_path}")
    return 0 if rep.ok else 1


def _entry_report_text(p, rep):
    lines = [
        f"Q0 = {rep.Q0:.12g}",
        f"C0 = {rep.C0:.12g}",
        f"mu0 = {rep.mu0:.12g}",
        f"rho0 = {rep.rho0:.12g}",
        f"Dsign0 = {rep.Dsign0:.12g}",
        f"Dang0 = {rep.Dang0:.12g}",
        f"sigma0 = {rep.sigma0:.12g}",
        f"eps_strain0 = {rep.eps_strain0:.12g}",
        f"delta_jet0 = {rep.delta_jet0:.12g}",
        f"E0 = {rep.E0:.12g}",
        f"source_dominance_ok = {rep.source_dominance_ok}",
        f"C0/Q0^2 = {rep.C0 / rep.Q0**2 if rep.Q0 else math.inf:.12g}"
        f" (kappa = {p.kappa})",
    ]
    for v in rep.violations:
        lines.append(f"violated: {v}")
    return "\n".join(lines) + "\n"


def cmd_self_entry(cfg):
    p = cfg.data_parameters()
    violations = p.validate()
    if violations:
        for v in violations:
            print(f"violated: {v}")
        return 1
    g0, gamma0 = build_initial_fields(p, cfg.grid())
    rep = self_entry_check(p, g0, gamma0, cfg.solver_recovery_tol)
    print(_entry_report_text(p, rep), end="")
    return 0 if rep.ok else 1


def cmd_evolve(cfg):
    out = _outdir(cfg)
    p = cfg.data_parameters()
    grid = cfg.grid()
    if cfg.time_t_final <= 0.0:
        # degenerate horizon: emit the single t = 0 record
        g0, gamma0 = build_initial_fields(p, grid)
        state = evolution.EvolutionState(0.0, g0, gamma0,
                                         qel.fields.PacketFrame(p.r0, p.lambda0, 0.0))
        rec = evolution.compute_record(state, delta_c=cfg.solver_delta_c,
                                       split_factor=cfg.solver_split_factor,
                                       tol=cfg.solver_recovery_tol)
        result = evolution.RunResult([rec], state, "t_final")
    else:
        result = evolution.run(
            p, grid, t_final=cfg.time_t_final, dt_max=cfg.time_dt_max,
            record_interval=cfg.time_record_interval,
            tol=cfg.solver_recovery_tol, e_cap=cfg.solver_e_cap,
            delta_c=cfg.solver_delta_c, split_factor=cfg.solver_split_factor,
            sigma_t_cap=cfg.time_sigma_t_cap or None,
            sigma_dt_cap=cfg.time_sigma_dt_cap, cfl=cfg.time_cfl)
    csv_path = os.path.join(out, "series.csv")
    series.write_series(result.records, csv_path)
    ckpt = os.path.join(out, "final.qel")
    evolution.write_checkpoint(ckpt, result.final_state)
    cfg.write_manifest(os.path.join(out, "run-manifest.txt"),
                       {"command": "evolve", "exit_reason": result.exit_reason,
                        "exit_component": result.exit_component or "",
                        "records": len(result.records)})
    print(f"{len(result.records)} records -> {csv_path} (halt: {result.exit_reason}"
          + (f", component {result.exit_component}" if result.exit_component else "")
          + ")")
    return 0


def cmd_compare_ode(cfg, from_series=None):
    if from_series:
        recs = series.read_series(from_series)
        fit = riccati.fit_constants(recs)
        print(f"fitted band: c_lower = {fit.c_lower:.6g}, C0_upper = {fit.C0_upper:.6g}, "
              f"kappa_max = {fit.kappa_max:.6g}, dominance_ok = {fit.dominance_ok}")
        if fit.degenerate:
            print("degenerate Dini band; no comparison run")
            return 1
        first = recs[0]
        s0 = riccati.ComparisonState(first.Q, first.C, fit.c_lower, fit.kappa_max)
    else:
        s0 = riccati.ComparisonState(cfg.ode_q0, cfg.ode_c0, cfg.ode_c, cfg.ode_kappa)
    res = riccati.integrate(s0, cfg.ode_t_max, rtol=cfg.ode_rtol,
                            system=cfg.ode_system, check_bound=False)
    print(f"blow-up estimate T = {res.blowup_time:.9g}, bound 1/(c kappa Q0) = "
          f"{res.bound:.9g}, satisfied = {res.bound_satisfied}")
    return 0 if res.bound_satisfied else 1


def cmd_report(cfg, csv_path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    recs = series.read_series(csv_path)
    out = _outdir(cfg)
    t = np.array([r.t for r in recs])
    made = []

    def save(fig, name):
        path = os.path.join(out, name)
        fig.savefig(path, dpi=130)
        plt.close(fig)
        made.append(path)

    fig, ax = plt.subplots()
    ax.plot(t, [r.Q for r in recs], marker=".")
    ax.set_xlabel("t"), ax.set_ylabel("Q")
    save(fig, "q.png")

    fig, ax = plt.subplots()
    ax.plot(t, [r.C for r in recs], marker=".", color="tab:orange")
    ax.set_xlabel("t"), ax.set_ylabel("C")
    save(fig, "c.png")

    fig, ax = plt.subplots()
    for name in ("delta_jet", "mu", "Rprof", "rho", "eps_strain", "E"):
        ax.plot(t, [getattr(r, name) for r in recs], label=name)
    ax.set_xlabel("t"), ax.set_yscale("log"), ax.legend(fontsize=8)
    save(fig, "e_components.png")

    fig, ax = plt.subplots()
    q = np.array([r.Q for r in recs])
    ax.plot(t[q > 0], 1.0 / q[q > 0], marker=".", color="tab:green")
    ax.set_xlabel("t"), ax.set_ylabel("1/Q")
    save(fig, "inv_q.png")

    print("wrote " + ", ".join(made))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="qel", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=qel.__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("verify-kernel", "make-data", "self-entry", "evolve"):
        p = sub.add_parser(name)
        _add_config_flags(p)
    p = sub.add_parser("compare-ode")
    _add_config_flags(p)
    p.add_argument("--from-series", metavar="CSV",
                   help="fit constants from a diagnostics series")
    p = sub.add_parser("report")
    _add_config_flags(p)
    p.add_argument("series_csv", metavar="CSV")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.command == "verify-kernel":
            return cmd_verify_kernel(cfg)
        if args.command == "make-data":
            return cmd_make_data(cfg)
        if args.command == "self-entry":
            return cmd_self_entry(cfg)
        if args.command == "evolve":
            return cmd_evolve(cfg)
        if args.command == "compare-ode":
            return cmd_compare_ode(cfg, args.from_series)
        if args.command == "report":
            return cmd_report(cfg, args.series_csv)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (evolution.EvolutionError, riccati.ComparisonError, ValueError,
            RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
