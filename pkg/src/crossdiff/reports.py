"""Deterministic CSV and JSON artifact writers.

Every float is rendered with repr(), the shortest digit string that round
trips to the same double, so identical runs produce byte-identical files.
Column layouts are part of the public contract and documented in the README:

- trajectory.csv (fixed):  t,cell,x,u_0,...,u_n
- trajectory.csv (moving): t,cell,x,e,u_0,...,u_n   (x = xi * e(t))
- diagnostics.csv:         t,mass_0,...,mass_n,entropy,newton_iterations
- profile_long.csv:        t,x,species,value
- densities.csv (lattice): t,bin,species,density,replica_std
- pde_profile.csv:         t,cell,x,u_0,...,u_n
- comparison.csv:          t,species,linf_distance,rms_distance
"""

from __future__ import annotations

import csv
import json

import numpy as np


def fmt(value) -> str:
    """Shortest exact decimal form of a float (ints stay ints)."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if not isinstance(v, str) else v
                             for v in row])


def write_json(path, payload: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _full_profile(u: np.ndarray) -> np.ndarray:
    """Prepend the solvent column u_0 = 1 - sum(u)."""
    solvent = 1.0 - u.sum(axis=1, keepdims=True)
    return np.hstack([solvent, u])


def species_header(n: int) -> list:
    return [f"u_{i}" for i in range(n + 1)]


def write_fixed_trajectory(path, traj):
    n = traj.states[0].n
    x = traj.grid.centers
    rows = []
    for t, state in zip(traj.times, traj.states):
        full = _full_profile(state.u)
        for k in range(traj.grid.cells):
            rows.append([t, k, x[k], *full[k]])
    write_csv(path, ["t", "cell", "x"] + species_header(n), rows)


def write_moving_trajectory(path, traj):
    n = traj.states[0].n
    xi = traj.grid.centers
    rows = []
    for t, state, e in zip(traj.times, traj.states, traj.thicknesses):
        full = _full_profile(state.u)
        for k in range(traj.grid.cells):
            rows.append([t, k, xi[k] * e, e, *full[k]])
    write_csv(path, ["t", "cell", "x", "e"] + species_header(n), rows)


def write_diagnostics(path, traj):
    n_tot = len(traj.masses[0])
    rows = []
    iters = [0] + list(traj.newton_iters)  # no solve precedes t = 0
    for t, masses, entropy, it in zip(traj.diag_times, traj.masses,
                                      traj.entropies, iters):
        rows.append([t, *masses, entropy, it])
    header = (["t"] + [f"mass_{i}" for i in range(n_tot)]
              + ["entropy", "newton_iterations"])
    write_csv(path, header, rows)


def write_profile_long(path, traj, thicknesses=None):
    """Plot-ready long format: one (t, x, species, value) per row."""
    rows = []
    for idx, (t, state) in enumerate(zip(traj.times, traj.states)):
        scale = 1.0 if thicknesses is None else thicknesses[idx]
        x = traj.grid.centers * scale
        full = _full_profile(state.u)
        for k in range(traj.grid.cells):
            for s in range(full.shape[1]):
                rows.append([t, x[k], s, full[k, s]])
    write_csv(path, ["t", "x", "species", "value"], rows)


def write_lattice_densities(path, traj):
    rows = []
    for ti, t in enumerate(traj.times):
        for b in range(traj.bins):
            for s in range(traj.n_species):
                rows.append([t, b, s, traj.density_mean[ti, b, s],
                             traj.density_std[ti, b, s]])
    write_csv(path, ["t", "bin", "species", "density", "replica_std"], rows)


def write_pde_profile(path, times, x, profiles):
    """profiles: list of (cells, n) arrays aligned with times."""
    n = profiles[0].shape[1]
    rows = []
    for t, u in zip(times, profiles):
        full = _full_profile(u)
        for k in range(len(x)):
            rows.append([t, k, x[k], *full[k]])
    write_csv(path, ["t", "cell", "x"] + species_header(n), rows)


def write_comparison(path, times, linf, rms):
    """linf, rms: arrays of shape (times, species)."""
    rows = []
    for ti, t in enumerate(times):
        for s in range(linf.shape[1]):
            rows.append([t, s, linf[ti, s], rms[ti, s]])
    write_csv(path, ["t", "species", "linf_distance", "rms_distance"], rows)
