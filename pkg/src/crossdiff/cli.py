"""Command-line runner: one config file, one experiment, fixed artifact set.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 I/O error.  Every run writes summary.json declaring all artifacts it
produced.  Reruns with identical config and seed are byte-identical across
every output file; the wall-clock time is therefore reported on stdout, not
in the summary.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, fv_fixed, reports
from .config import ConfigError, evaluate_initial, load_config, parse_config
from .fv_fixed import Field, Grid1D, NonConvergenceError, SolverConfig
from .lattice import kmc_run, sample_replicas
from .mobility import StructureHypothesisError, check_structure
from .moving_domain import mass_balance, run_moving

_COMMAND_MODES = {
    "run-fixed": "fixed",
    "run-moving": "moving",
    "check-structure": "check-structure",
    "lattice": "lattice",
    "compare": "compare",
}


def _solvent_first(u: np.ndarray) -> np.ndarray:
    return np.hstack([1.0 - u.sum(axis=1, keepdims=True), u])


def _mass_drift(masses) -> float:
    arr = np.asarray(masses)
    return float(np.abs(arr - arr[0]).max())


def _max_entropy_increase(entropies) -> float:
    arr = np.asarray(entropies)
    if arr.size < 2:
        return 0.0
    return float(np.diff(arr).max())


def _handle_fixed(cfg, outdir: Path):
    grid = Grid1D(cfg.grid["length"], cfg.grid["cells"])
    u0 = evaluate_initial(cfg.initial, grid.centers, grid.length, cfg.n)
    field = Field.from_initial(grid, u0)
    traj = fv_fixed.run(field, cfg.K, cfg.solver)
    reports.write_fixed_trajectory(outdir / "trajectory.csv", traj)
    reports.write_diagnostics(outdir / "diagnostics.csv", traj)
    reports.write_profile_long(outdir / "profile_long.csv", traj)
    extras = {
        "final_time": traj.diag_times[-1],
        "final_masses": [float(v) for v in traj.masses[-1]],
        "final_entropy": traj.entropies[-1],
        "max_mass_drift": _mass_drift(traj.masses),
        "max_entropy_step_increase": _max_entropy_increase(traj.entropies),
        "newton_iterations_total": int(sum(traj.newton_iters)),
    }
    return ["trajectory.csv", "diagnostics.csv", "profile_long.csv"], extras


def _handle_moving(cfg, outdir: Path):
    grid = Grid1D(1.0, cfg.grid["cells"])  # reference domain
    e0 = float(cfg.grid["initial_thickness"])
    u0 = evaluate_initial(cfg.initial, grid.centers * e0, e0, cfg.n)
    field = Field.from_initial(grid, u0)
    traj = run_moving(field, cfg.K, cfg.schedule, e0, cfg.solver)
    balance = mass_balance(traj)
    reports.write_moving_trajectory(outdir / "trajectory.csv", traj)
    reports.write_diagnostics(outdir / "diagnostics.csv", traj)
    reports.write_profile_long(outdir / "profile_long.csv", traj,
                               thicknesses=traj.thicknesses)
    reports.write_json(outdir / "mass_balance.json", balance.to_dict())
    extras = {
        "final_time": traj.diag_times[-1],
        "final_thickness": traj.thicknesses[-1],
        "final_masses": [float(v) for v in traj.masses[-1]],
        "final_entropy": traj.entropies[-1],
        "mass_balance": balance.to_dict(),
        "newton_iterations_total": int(sum(traj.newton_iters)),
    }
    return ["trajectory.csv", "diagnostics.csv", "profile_long.csv",
            "mass_balance.json"], extras


def _handle_structure(cfg, outdir: Path):
    cert = check_structure(
        cfg.K, samples=cfg.structure["samples"], seed=cfg.seed,
        z_per_sample=cfg.structure["directions_per_sample"])
    payload = cert.to_dict()
    reports.write_json(outdir / "certificate.json", payload)
    return ["certificate.json"], {"certificate": payload}


def _lattice_run(cfg):
    lat = cfg.lattice
    L = int(lat["sites"])
    length = float(lat["length"])
    x_sites = (np.arange(L) + 0.5) * (length / L)
    u = evaluate_initial(cfg.initial, x_sites, length, cfg.n)
    states = sample_replicas(_solvent_first(u), length, cfg.seed,
                             int(lat["replicas"]))
    return kmc_run(states, cfg.K, float(lat["t_end"]),
                   output_times=lat.get("output_times"),
                   bins=int(lat["bins"]), backend=lat.get("backend"),
                   threads=cfg.threads)


def _handle_lattice(cfg, outdir: Path):
    traj = _lattice_run(cfg)
    reports.write_lattice_densities(outdir / "densities.csv", traj)
    totals = traj.species_totals()
    extras = {
        "backend": traj.backend,
        "replicas": traj.replicas,
        "bins": traj.bins,
        "sites": traj.n_sites,
        "particles_conserved": bool((totals == totals[0]).all()),
        "final_time": traj.times[-1],
    }
    return ["densities.csv"], extras


def _handle_compare(cfg, outdir: Path):
    traj_lat = _lattice_run(cfg)
    length = float(cfg.lattice["length"])
    cells = int(cfg.compare["pde_cells"])
    bins = traj_lat.bins
    grid = Grid1D(length, cells)
    u0 = evaluate_initial(cfg.initial, grid.centers, length, cfg.n)
    field = Field.from_initial(grid, u0)

    times = list(traj_lat.times)  # includes 0.0
    profiles = [field.u]
    t_prev = 0.0
    for t in times[1:]:
        interval = t - t_prev
        steps = max(1, int(np.ceil(interval / cfg.solver.dt - 1e-12)))
        sub = SolverConfig(
            dt=interval / steps, t_end=interval,
            newton_tol=cfg.solver.newton_tol,
            newton_max_iter=cfg.solver.newton_max_iter,
            dt_min=min(cfg.solver.dt_min, interval / steps),
            output_every=10**9)
        run_traj = fv_fixed.run(field, cfg.K, sub)
        field = run_traj.states[-1]
        profiles.append(field.u)
        t_prev = t

    group = cells // bins
    linf = np.zeros((len(times), traj_lat.n_species))
    rms = np.zeros_like(linf)
    for ti in range(len(times)):
        full = _solvent_first(profiles[ti])
        binned = full.reshape(bins, group, -1).mean(axis=1)
        diff = np.abs(binned - traj_lat.density_mean[ti])
        linf[ti] = diff.max(axis=0)
        rms[ti] = np.sqrt((diff**2).mean(axis=0))

    reports.write_lattice_densities(outdir / "densities.csv", traj_lat)
    reports.write_pde_profile(outdir / "pde_profile.csv", times,
                              grid.centers, profiles)
    reports.write_comparison(outdir / "comparison.csv", times, linf, rms)
    extras = {
        "backend": traj_lat.backend,
        "replicas": traj_lat.replicas,
        "bins": bins,
        "sites": traj_lat.n_sites,
        "pde_cells": cells,
        "final_time": times[-1],
        "final_linf_distance": float(linf[-1].max()),
        "max_linf_distance": float(linf[1:].max()) if len(times) > 1
                             else 0.0,
    }
    return ["densities.csv", "pde_profile.csv", "comparison.csv"], extras


_HANDLERS = {
    "fixed": _handle_fixed,
    "moving": _handle_moving,
    "check-structure": _handle_structure,
    "lattice": _handle_lattice,
    "compare": _handle_compare,
}


def run_experiment(config_path, *, output_dir=None, seed=None, threads=None,
                   expected_mode=None) -> int:
    """Execute one experiment; returns the process exit code."""
    t_start = time.perf_counter()
    try:
        raw = load_config(config_path)
        cfg = parse_config(raw, seed=seed, output_dir=output_dir,
                           threads=threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4

    if expected_mode is not None and cfg.mode != expected_mode:
        print(f"config error: config mode {cfg.mode!r} does not match "
              f"the {expected_mode!r} subcommand", file=sys.stderr)
        return 2
    if cfg.output_dir is None:
        print("config error: no output directory (set output_dir in the "
              "config or pass --out)", file=sys.stderr)
        return 2

    outdir = Path(cfg.output_dir)
    summary = {
        "mode": cfg.mode,
        "seed": cfg.seed,
        "threads": cfg.threads,
        "version": __version__,
        "status": "ok",
        "reason": None,
        "outputs": ["summary.json"],
    }
    status = 0
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        outputs, extras = _HANDLERS[cfg.mode](cfg, outdir)
        summary["outputs"] = sorted(outputs + ["summary.json"])
        summary.update(extras)
    except StructureHypothesisError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        summary["status"] = "non-convergence"
        summary["reason"] = str(exc)
        summary["worst_residual"] = exc.worst_residual
        status = 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4

    try:
        reports.write_json(outdir / "summary.json", summary)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4
    # Timing stays out of the artifacts so identical reruns are
    # byte-identical; it is still reported for the operator.
    print(f"{cfg.mode}: wrote {len(summary['outputs'])} artifacts to "
          f"{outdir} in {time.perf_counter() - t_start:.3f}s")
    if status:
        print(f"non-convergence: {summary['reason']}", file=sys.stderr)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossdiff",
        description="Cross-diffusion simulation suite: entropy-stable "
                    "finite-volume solvers, structure certification, and a "
                    "stochastic lattice oracle.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "run-fixed": "solve the system on a fixed interval",
        "run-moving": "solve the growth model on a moving interval",
        "check-structure": "certify the entropy structure of a coefficient "
                           "matrix",
        "lattice": "run the stochastic lattice oracle",
        "compare": "run lattice oracle and PDE solver side by side",
    }
    for command, mode in _COMMAND_MODES.items():
        p = sub.add_parser(command, help=descriptions[command])
        p.add_argument("--config", required=True, help="path to a JSON "
                       "experiment configuration")
        p.add_argument("--out", default=None, help="output directory "
                       "(overrides output_dir from the config)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--threads", type=int, default=None,
                       help="cap on worker threads")
        p.set_defaults(mode=mode)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run_experiment(args.config, output_dir=args.out, seed=args.seed,
                          threads=args.threads, expected_mode=args.mode)


if __name__ == "__main__":
    sys.exit(main())
