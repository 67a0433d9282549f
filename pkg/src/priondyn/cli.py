"""Command-line harness: one subcommand per experiment.

Every run reads a plain-text config, executes, and drops deterministic
output files (CSV tables plus a JSON record) into the output directory.
File names embed a digest of the canonical config echo so different
configurations never collide; rerunning the same configuration
overwrites byte-identically.  Failures still write a machine-readable
error file and exit nonzero.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import sys
import time
from pathlib import Path

import numpy as np

from . import discrete as discrete_mod
from . import reference
from .config import ConfigError, RunConfig, parse_config
from .dynamics import (IntegratorFailure, growth_rate, incubation_time,
                       integrate, seed_state, sweep)
from .eigen import principal_eigenpair, scan_lambda
from .grid import SizeGrid
from .kernel import kernel_weights
from .operator import assemble, assemble_adjoint, macroscopic_balance
from .records import (ExperimentRecord, canonical_json, config_echo,
                      grid_hash, write_csv)
from .steady import bimodality_report, build_steady_state, find_v_inf

__all__ = ["main"]


def _digest(echo: dict) -> str:
    return hashlib.sha256(canonical_json(echo).encode()).hexdigest()[:10]


def _write_json(path: Path, record: ExperimentRecord, timings: bool) -> None:
    path.write_text(record.to_json(include_timings=timings) + "\n")


def _residual_column(traj, record_every: int) -> np.ndarray:
    """Max conservation residual between consecutive recorded rows.

    Row boundaries are every record_every-th accepted step plus the final
    step; the first row (initial condition) gets zero.
    """
    bounds = list(range(record_every, traj.steps + 1, record_every))
    if not bounds or bounds[-1] != traj.steps:
        bounds.append(traj.steps)
    col = [0.0]
    prev = 0
    res = traj.conservation_residuals
    for b in bounds:
        col.append(float(res[prev:b].max()) if b > prev else 0.0)
        prev = b
    return np.asarray(col)


# --- experiment runners ----------------------------------------------------

def _run_eigen(cfg: RunConfig, out: Path) -> int:
    grid = cfg.make_grid()
    echo = config_echo(cfg)
    tag = _digest(echo)
    t0 = time.perf_counter()
    scan = scan_lambda(cfg.coeffs, grid, cfg.eigen_v_values, tol=cfg.eigen_tol,
                       keep_solutions=True)
    results = {
        "v_values": scan.v_values,
        "loss_rates": scan.lambda_values,
        "growth_rates": scan.growth_rates,
        "decreasing": scan.decreasing,
        "sign_at_largest": scan.sign_at_largest,
    }
    if scan.lambda0_minus_decay0 is not None:
        results["loss_rate_at_zero_minus_decay"] = scan.lambda0_minus_decay0
    residuals, iters = [], []
    for k, sol in enumerate(scan.solutions):
        residuals.append(sol.residual)
        iters.append(sol.iterations)
        if sol.u_vec is not None:
            write_csv(out / ("eigen-%s-v%02d.csv" % (tag, k)),
                      ["x", "density"], [grid.centers, sol.u_vec])
    write_csv(out / ("eigen-%s.csv" % tag),
              ["v", "loss_rate", "growth_rate", "residual", "iterations"],
              [scan.v_values, scan.lambda_values, scan.growth_rates,
               np.asarray(residuals), np.asarray(iters, dtype=float)])
    record = ExperimentRecord(
        experiment="eigen", config_echo=echo, results=results,
        diagnostics={"grid_hash": grid_hash(grid), "residuals": residuals,
                     "iterations": iters,
                     "timings": {"seconds": time.perf_counter() - t0}})
    _write_json(out / ("eigen-%s.json" % tag), record, cfg.timings)
    return 0


def _run_steady(cfg: RunConfig, out: Path) -> int:
    grid = cfg.make_grid()
    echo = config_echo(cfg)
    tag = _digest(echo)
    t0 = time.perf_counter()
    ss = build_steady_state(cfg.coeffs, grid, v_max=cfg.steady_v_max)
    rep = bimodality_report(ss, cfg.coeffs)
    results = {
        "v_inf": ss.v_inf,
        "rho_inf": ss.rho_inf,
        "exists": ss.exists,
        "center_of_mass": rep.center_of_mass,
        "n_modes": rep.n_modes,
        "mode_locations": rep.mode_locations,
        "secondary_mass_fraction": rep.secondary_mass_fraction,
    }
    if rep.necessary_condition_met is not None:
        results["necessary_condition_met"] = rep.necessary_condition_met
    if ss.u_inf is not None:
        write_csv(out / ("steady-%s-profile.csv" % tag),
                  ["x", "density"], [grid.centers, ss.u_inf])
    record = ExperimentRecord(
        experiment="steady", config_echo=echo, results=results,
        diagnostics={"grid_hash": grid_hash(grid),
                     "root_evaluations": ss.root.evaluations,
                     "monotone_warning": ss.root.monotone_warning,
                     "timings": {"seconds": time.perf_counter() - t0}})
    _write_json(out / ("steady-%s.json" % tag), record, cfg.timings)
    return 0


def _run_simulate(cfg: RunConfig, out: Path) -> int:
    grid = cfg.make_grid()
    echo = config_echo(cfg)
    tag = _digest(echo)
    t0 = time.perf_counter()
    initial = seed_state(cfg.coeffs, grid, scale=cfg.seed_scale,
                         v_init=cfg.v_init)
    rho0 = initial.moment0()
    diagnostics: dict = {"grid_hash": grid_hash(grid)}
    try:
        traj = integrate(cfg.coeffs, grid, initial, cfg.t_end,
                         snapshot_times=cfg.snapshot_times,
                         record_every=cfg.record_every, dt_max=cfg.dt_max)
    except IntegratorFailure as exc:
        diagnostics.update(error=str(exc), error_type="IntegratorFailure",
                           timings={"seconds": time.perf_counter() - t0})
        state = exc.state
        results = {"failed_at": state.t if state is not None else None,
                   "v_last": state.v if state is not None else None}
        record = ExperimentRecord(experiment="simulate", config_echo=echo,
                                  results=results, diagnostics=diagnostics)
        _write_json(out / ("simulate-%s.json" % tag), record, cfg.timings)
        return 1

    write_csv(out / ("simulate-%s-trajectory.csv" % tag),
              ["t", "v", "polymer_count", "polymer_mass",
               "conservation_residual"],
              [traj.times, traj.v_series, traj.rho_series, traj.p_series,
               _residual_column(traj, cfg.record_every)])
    for k, (ts, uu) in enumerate(traj.snapshots):
        write_csv(out / ("simulate-%s-snap-%02d.csv" % (tag, k)),
                  ["x", "density"], [grid.centers, uu])

    results = {
        "t_end": traj.times[-1],
        "v_final": traj.v_series[-1],
        "count_final": traj.rho_series[-1],
        "mass_final": traj.p_series[-1],
        "rho0": rho0,
        "snapshot_times": [ts for ts, _ in traj.snapshots],
    }
    lam_vbar = None
    if cfg.coeffs.clearance > 0.0:
        lam_vbar = principal_eigenpair(cfg.coeffs, grid, cfg.vbar,
                                       tol=cfg.eigen_tol).lambda_eig
        results["loss_rate_at_vbar"] = lam_vbar
    try:
        fit = growth_rate(traj, (cfg.fit_start, cfg.fit_end))
        results.update(growth_rate=fit.rate, growth_r_squared=fit.r_squared,
                       growth_v_drift=fit.v_drift)
    except ValueError as exc:
        diagnostics["growth_fit_skipped"] = str(exc)
    if rho0 > 0.0:
        inc = incubation_time(traj, cfg.threshold_ratio * rho0, rho0,
                              loss_rate_at_vbar=lam_vbar)
        results.update(t_incubation=inc.t_incubation,
                       incubation_reached=inc.reached,
                       incubation_predicted=inc.predicted,
                       incubation_threshold=inc.threshold)
    diagnostics.update(
        steps=traj.steps, rejections=traj.rejections,
        max_conservation_residual=float(traj.conservation_residuals.max())
        if traj.conservation_residuals.size else 0.0,
        truncation_flux_total=traj.truncation_flux_total,
        timings={"seconds": time.perf_counter() - t0})
    record = ExperimentRecord(experiment="simulate", config_echo=echo,
                              results=results, diagnostics=diagnostics)
    _write_json(out / ("simulate-%s.json" % tag), record, cfg.timings)
    return 0


def _sweep_scalar_rows(axis: str, values, records):
    """Per-item scalar columns for the sweep summary table."""
    keymap = {
        "tightness": ("loss_rate", "growth_rate", "conv_average", "n_modes"),
        "peak_center": ("v_inf", "n_modes", "center_of_mass",
                        "secondary_mass_fraction"),
    }
    keys = keymap.get(axis, ("rho0", "t_incubation", "measured_growth_rate"))
    cols = {k: [] for k in keys}
    ok = []
    for rec in records:
        failed = "error" in rec.diagnostics
        ok.append(not failed)
        for k in keys:
            val = rec.results.get(k) if not failed else None
            cols[k].append(float("nan") if val is None else float(val))
    return keys, cols, ok


def _run_sweep(cfg: RunConfig, out: Path) -> int:
    echo = config_echo(cfg)
    tag = _digest(echo)
    t0 = time.perf_counter()
    records = sweep(cfg, threads=cfg.threads)
    for k, rec in enumerate(records):
        _write_json(out / ("sweep-%s-item-%02d.json" % (tag, k)), rec,
                    cfg.timings)
    axis = cfg.sweep_axis
    values = list(cfg.sweep_values)
    keys, cols, ok = _sweep_scalar_rows(axis, values, records)
    write_csv(out / ("sweep-%s.csv" % tag), ["value"] + list(keys),
              [np.asarray(values, dtype=float)]
              + [np.asarray(cols[k]) for k in keys])

    summary: dict = {"axis": axis, "values": values,
                     "n_failed": int(len(ok) - sum(ok))}
    summary.update({k: cols[k] for k in keys})
    if axis == "tightness":
        gr = np.asarray(cols["growth_rate"])
        if np.isfinite(gr).any():
            best = int(np.nanargmax(gr))
            summary["argmax_value"] = values[best]
            summary["argmax_growth_rate"] = float(gr[best])
        onset = next((v for v, n in zip(values, cols["n_modes"])
                      if np.isfinite(n) and n >= 2), None)
        summary["bimodality_onset_value"] = onset
    if axis == "dose":
        tinc = np.asarray(cols["t_incubation"])
        good = np.isfinite(tinc)
        if good.sum() >= 2:
            slope = float(np.polyfit(np.log(np.asarray(values)[good]),
                                     tinc[good], 1)[0])
            summary["slope_fitted"] = slope
            grid = cfg.make_grid()
            lam = principal_eigenpair(cfg.coeffs, grid, cfg.vbar,
                                      tol=cfg.eigen_tol).lambda_eig
            if lam > 0.0:
                summary["slope_predicted"] = None
            else:
                summary["slope_predicted"] = -1.0 / abs(lam)
    if axis in ("bell_amplitude", "frag_slope"):
        tinc = [v for v in cols["t_incubation"]]
        finite = [v for v in tinc if np.isfinite(v)]
        summary["incubation_decreasing"] = (
            all(b < a for a, b in zip(finite, finite[1:]))
            if len(finite) >= 2 else None)
    record = ExperimentRecord(
        experiment="sweep", config_echo=echo, results=summary,
        diagnostics={"timings": {"seconds": time.perf_counter() - t0}})
    _write_json(out / ("sweep-%s.json" % tag), record, cfg.timings)
    return 0


# --- validate battery ------------------------------------------------------

def _check(name, passed, **detail):
    out = {"name": name, "passed": bool(passed)}
    out.update(detail)
    return out


def _run_validate(cfg: RunConfig, out: Path, run_discrete: bool,
                  dump_operator: bool) -> int:
    echo = config_echo(cfg)
    tag = _digest(echo)
    t0 = time.perf_counter()
    coeffs = cfg.coeffs
    checks = []

    grid = SizeGrid.uniform(50.0, 300, x0=coeffs.x0)
    W = kernel_weights(coeffs.kernel, grid)
    x, h = grid.centers, grid.widths
    count_err = 0.0
    mass_err = 0.0
    for j in range(2, grid.n):
        yj = x[j]
        count_err = max(count_err, abs(W[:j, j].sum() - (yj - coeffs.x0) / yj))
        mass_err = max(mass_err, abs(x[:j] @ W[:j, j]
                                     - (yj * yj - coeffs.x0 ** 2) / (2 * yj)))
    mass_err = max(mass_err, abs(x[0] * W[0, 1]
                                 - (x[1] ** 2 - coeffs.x0 ** 2) / (2 * x[1])))
    checks.append(_check("kernel-moment-laws",
                         count_err < 1e-12 and mass_err < 1e-12,
                         count_error=count_err, mass_error=mass_err))

    grid2 = SizeGrid.uniform(50.0, 200, x0=coeffs.x0)
    op = assemble(coeffs, grid2, 100.0)
    adj = assemble_adjoint(coeffs, grid2, 100.0)
    rng = np.random.default_rng(cfg.seed)
    h2 = grid2.widths
    worst = 0.0
    for _ in range(20):
        uu = rng.random(grid2.n)
        ph = rng.random(grid2.n)
        lhs = float((op.matrix @ uu) * ph @ h2)
        rhs = float(uu * (adj.matrix @ ph) @ h2)
        scale = max(1.0, abs(lhs))
        worst = max(worst, abs(lhs - rhs) / scale)
    checks.append(_check("adjoint-duality", worst < 1e-10, max_error=worst))

    from .coefficients import Affine, Constant
    closed_ok = (isinstance(coeffs.conversion, Constant)
                 and isinstance(coeffs.decay, Constant)
                 and isinstance(coeffs.fragmentation, Affine)
                 and coeffs.fragmentation.intercept == 0.0)
    if closed_ok:
        tau0 = coeffs.conversion.value
        mu0 = coeffs.decay.value
        beta0 = coeffs.fragmentation.slope
        grid3 = SizeGrid.uniform(cfg.xmax, 400, x0=coeffs.x0)
        worst_rel = 0.0
        for v in (100.0, 600.0):
            lam = principal_eigenpair(coeffs, grid3, v).lambda_eig
            ref = reference.loss_rate_constant(tau0, beta0, mu0, v)
            worst_rel = max(worst_rel, abs(lam - ref) / max(abs(ref), 1e-12))
        checks.append(_check("eigen-closed-form", worst_rel < 1e-2,
                             max_rel_error=worst_rel))
        root = find_v_inf(coeffs, grid3)
        ref_v = reference.equilibrium_monomer_level(tau0, beta0, mu0)
        ok_root = root.found and abs(root.v_inf - ref_v) / ref_v < 1e-2
        checks.append(_check("steady-root", ok_root,
                             v_inf=root.v_inf if root.found else None,
                             closed_form=ref_v))
    else:
        checks.append(_check("eigen-closed-form", True,
                             skipped="coefficients are not in the "
                                     "constant/linear closed-form class"))

    grid4 = SizeGrid.uniform(cfg.xmax, 300, x0=coeffs.x0)
    initial = seed_state(coeffs, grid4, scale=1.0)
    traj = integrate(coeffs, grid4, initial, 10.0, record_every=10)
    res = float(traj.conservation_residuals.max())
    checks.append(_check("conservation-books", res < 1e-8, max_residual=res))

    mass = reference.initial_seed_mass(50.0)
    frozen = 0.5453603675897958
    checks.append(_check("seed-mass-quadrature", abs(mass - frozen) < 1e-12,
                         value=mass, frozen=frozen))

    if run_discrete:
        rep = discrete_mod.compare_continuum(discrete_mod.default_calibration())
        ok_d = (rep["uninfected_max_rel_diff_v"] < 1e-10
                and rep["growth_rel_diff"] < 0.05
                and rep["mass_residual_max"] < 1e-8)
        checks.append(_check("discrete-cross-check", ok_d, **rep))

    if dump_operator:
        gridd = cfg.make_grid()
        opd = assemble(coeffs, gridd, cfg.vbar if np.isfinite(cfg.vbar) else 100.0)
        np.savetxt(out / ("operator-%s.csv" % tag), opd.matrix,
                   delimiter=",", fmt="%.17g")
        bal = macroscopic_balance(opd, seed_state(coeffs, gridd).u)
        checks.append(_check("operator-dump", True,
                             balance_residual=abs(bal.residual)))

    all_passed = all(c["passed"] for c in checks)
    record = ExperimentRecord(
        experiment="validate", config_echo=echo,
        results={"checks": checks, "all_passed": all_passed},
        diagnostics={"timings": {"seconds": time.perf_counter() - t0}})
    _write_json(out / ("validate-%s.json" % tag), record, cfg.timings)
    for c in checks:
        print("%-24s %s" % (c["name"], "pass" if c["passed"] else "FAIL"))
    return 0 if all_passed else 1


# --- entry point -----------------------------------------------------------

_DEFAULT_VALIDATE_CONFIG = "experiment = validate\n"


def _write_error(out: Path, command: str, exc: Exception) -> None:
    payload = {"experiment": command, "error": str(exc),
               "error_type": type(exc).__name__}
    if isinstance(exc, ConfigError):
        payload["errors"] = exc.errors
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / ("error-%s.json" % command)).write_text(
            canonical_json(payload) + "\n")
    except OSError:
        pass


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="priondyn",
        description="size-structured polymer growth/fragmentation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
            ("eigen", "frozen-level principal eigenvalue scan"),
            ("steady", "steady state and shape analysis"),
            ("simulate", "time integration of the coupled system"),
            ("sweep", "parameter sweep"),
            ("validate", "internal consistency battery")):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", required=(name != "validate"),
                       help="path to the run configuration file")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--threads", type=int,
                       help="worker threads for sweeps")
        if name == "validate":
            p.add_argument("--discrete", action="store_true",
                           help="also run the integer-chain cross-check")
            p.add_argument("--dump-operator", action="store_true",
                           help="write the dense generator matrix")
    args = parser.parse_args(argv)

    out_dir = Path(args.out) if args.out else None
    try:
        if args.config:
            text = Path(args.config).read_text()
        else:
            text = _DEFAULT_VALIDATE_CONFIG
        cfg = parse_config(text)
        if cfg.experiment != args.command:
            raise ConfigError([
                "config: experiment %r does not match subcommand %r"
                % (cfg.experiment, args.command)])
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.threads is not None:
            overrides["threads"] = args.threads
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
        out = out_dir if out_dir is not None else Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        # a fresh run supersedes any error artifact a failed earlier
        # attempt left in the same output directory
        stale = out / ("error-%s.json" % args.command)
        if stale.exists():
            stale.unlink()
        if args.command == "eigen":
            return _run_eigen(cfg, out)
        if args.command == "steady":
            return _run_steady(cfg, out)
        if args.command == "simulate":
            return _run_simulate(cfg, out)
        if args.command == "sweep":
            return _run_sweep(cfg, out)
        return _run_validate(cfg, out, args.discrete, args.dump_operator)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        _write_error(out_dir if out_dir is not None else Path("out"),
                     args.command, exc)
        return 2
    except Exception as exc:  # any other failure: error file + nonzero exit
        print("error: %s" % exc, file=sys.stderr)
        _write_error(out_dir if out_dir is not None else Path("out"),
                     args.command, exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
