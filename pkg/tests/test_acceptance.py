"""Acceptance gate: the ten headline guarantees the package ships with.

Each test prints one ``ACCEPTANCE k (<label>): PASS|FAIL`` line (visible with
``pytest -s``; the verbose test id carries the same information).  The two
lattice cross-checks dominate the runtime of the whole suite (several
minutes); everything else completes in seconds.
"""

import json
import time

import numpy as np
import pytest

from crossdiff.cli import run_experiment
from crossdiff.fv_fixed import Field, Grid1D, SolverConfig, run
from crossdiff.lattice import kmc_run, sample_replicas
from crossdiff.mobility import StructureCertificate, check_structure
from crossdiff.moving_domain import FluxSchedule, mass_balance, run_moving
from crossdiff.simplex import CoefficientMatrix

from conftest import random_coefficients, random_cosine_profile


def _report(num, label, ok, detail=""):
    print(f"ACCEPTANCE {num} ({label}): {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"acceptance {num} ({label}) failed: {detail}"


def _solvent_first(u):
    return np.hstack([1.0 - u.sum(axis=1, keepdims=True), u])


# ---------------------------------------------------------------- 1 - 3 ----

@pytest.fixture(scope="module")
def randomized_fixed_runs():
    """Twenty randomized fixed-domain runs shared by the first three gates:
    species count cycling 1/2/3, strictly positive couplings in [0.2, 2],
    100 cells, 500 implicit steps."""
    rng = np.random.default_rng(20260815)
    grid = Grid1D(1.0, 100)
    runs = []
    for idx in range(20):
        n = idx % 3 + 1
        K = random_coefficients(rng, n)
        u0 = random_cosine_profile(rng, n, grid.centers)
        field = Field.from_initial(grid, u0)
        runs.append(run(field, K, SolverConfig(dt=2e-4, t_end=0.1,
                                               output_every=25)))
    return runs


def test_01_constraint_preservation(randomized_fixed_runs):
    violations = 0
    for traj in randomized_fixed_runs:
        for state in traj.states:
            u = state.u
            rho = u.sum(axis=1)
            # the solvent closes the budget by definition, so the unit sum
            # holds identically; strict positivity is the real assertion
            if not (np.all(u > 0.0) and np.all(rho < 1.0)
                    and np.all(1.0 - rho > 0.0)):
                violations += 1
    _report(1, "constraint preservation", violations == 0,
            f"{violations} violating states over 20 runs")


def test_02_mass_conservation(randomized_fixed_runs):
    worst = 0.0
    for traj in randomized_fixed_runs:
        m = traj.masses_array()
        rel = np.abs(m - m[0]) / (1.0 + np.abs(m[0]))
        worst = max(worst, float(rel.max()))
    _report(2, "mass conservation", worst <= 1e-10,
            f"worst relative drift {worst:.3e} (tol 1e-10)")


def test_03_entropy_monotonicity(randomized_fixed_runs):
    worst = -np.inf
    for traj in randomized_fixed_runs:
        worst = max(worst, float(np.diff(traj.entropy_array()).max()))
    _report(3, "entropy monotonicity", worst <= 1e-8,
            f"max per-step increase {worst:.3e} (tol 1e-8)")


# -------------------------------------------------------------------- 4 ----

def test_04_structure_certificate():
    rng = np.random.default_rng(44)
    worst_quad, worst_hp, worst_dom = np.inf, 0.0, np.inf
    all_passed = True
    for idx in range(50):
        n = idx % 4 + 1
        K = random_coefficients(rng, n)
        cert = check_structure(K, samples=10000, seed=idx, z_per_sample=64)
        worst_quad = min(worst_quad, cert.min_quadratic_residual)
        worst_hp = max(worst_hp, cert.hp_identity_max_error)
        worst_dom = min(worst_dom, cert.m_matrix_min_dominance)
        all_passed = all_passed and cert.passed \
            and cert.m_matrix_max_asymmetry == 0.0
    ok = (all_passed
          and worst_quad >= StructureCertificate.PSD_TOL
          and worst_hp <= StructureCertificate.HP_TOL
          and worst_dom >= StructureCertificate.DOMINANCE_TOL)
    _report(4, "structure certificate", ok,
            f"min quad {worst_quad:.3e}, HP err {worst_hp:.3e}, "
            f"min dominance {worst_dom:.3e} over 50 matrices")


# -------------------------------------------------------------------- 5 ----

def _scalar_heat_profile(N, dt, t_end, k=1.0):
    grid = Grid1D(1.0, N)
    u0 = (0.5 + 0.4 * np.cos(np.pi * grid.centers))[:, None]
    field = Field.from_initial(grid, u0)
    cfg = SolverConfig(dt=dt, t_end=t_end, output_every=10**9)
    traj = run(field, CoefficientMatrix([[0.0, k], [k, 0.0]]), cfg)
    return grid, traj.states[-1].u[:, 0]


def test_05_equal_coefficient_reduction():
    # (a) equal couplings decouple: 2-species run vs two scalar runs
    k, N, dt, t_end = 0.8, 100, 1e-3, 0.05
    grid = Grid1D(1.0, N)
    x = grid.centers
    profiles = np.stack([0.35 + 0.2 * np.cos(np.pi * x),
                         0.30 - 0.15 * np.cos(2 * np.pi * x)], axis=1)
    cfg = SolverConfig(dt=dt, t_end=t_end, output_every=10**9)
    K2 = CoefficientMatrix(k * (np.ones((3, 3)) - np.eye(3)))
    coupled = run(Field.from_initial(grid, profiles), K2, cfg).states[-1].u
    K1 = CoefficientMatrix([[0.0, k], [k, 0.0]])
    decouple_err = 0.0
    for s in range(2):
        single = run(Field.from_initial(grid, profiles[:, s:s + 1]), K1,
                     cfg).states[-1].u[:, 0]
        decouple_err = max(decouple_err,
                           float(np.abs(coupled[:, s] - single).max()))

    # (b) single species against the exact cosine-mode decay
    grid200, u = _scalar_heat_profile(200, 1e-4, 0.1)
    exact = 0.5 + 0.4 * np.exp(-np.pi**2 * 0.1) * np.cos(np.pi * grid200.centers)
    heat_err = float(np.abs(u - exact).max())

    # (c) measured convergence orders: ~2 in dx, ~1 in dt
    errs = []
    for N in (10, 20, 40):
        g, u = _scalar_heat_profile(N, 5e-6, 0.02)
        ex = 0.5 + 0.4 * np.exp(-np.pi**2 * 0.02) * np.cos(np.pi * g.centers)
        errs.append(np.abs(u - ex).max())
    dx_orders = [float(np.log2(errs[i] / errs[i + 1])) for i in range(2)]
    profs = [_scalar_heat_profile(200, dt, 0.02)[1]
             for dt in (2e-3, 1e-3, 5e-4)]
    dt_order = float(np.log2(np.abs(profs[0] - profs[1]).max()
                             / np.abs(profs[1] - profs[2]).max()))

    ok = (decouple_err <= 1e-10 and heat_err <= 1e-3
          and all(abs(o - 2.0) <= 0.3 for o in dx_orders)
          and abs(dt_order - 1.0) <= 0.3)
    _report(5, "equal-coefficient reduction", ok,
            f"decouple {decouple_err:.2e} (tol 1e-10), heat {heat_err:.2e} "
            f"(tol 1e-3), dx orders {[round(o, 2) for o in dx_orders]}, "
            f"dt order {dt_order:.2f}")


# -------------------------------------------------------------------- 6 ----

def test_06_growth_mass_law():
    rng = np.random.default_rng(606)
    worst_ratio = 0.0
    for idx in range(10):
        n = idx % 2 + 1
        K = random_coefficients(rng, n)
        grid = Grid1D(1.0, 40)
        v0 = random_cosine_profile(rng, n, grid.centers)
        e0 = float(rng.uniform(0.3, 0.8))
        t_end = 0.5
        bp = float(rng.uniform(0.2, 0.3))
        values = rng.uniform(0.0, 0.2, size=(2, n + 1))
        sched = FluxSchedule((bp,), values, horizon=t_end)
        traj = run_moving(Field.from_initial(grid, v0), K, sched, e0,
                          SolverConfig(dt=1e-2, t_end=t_end,
                                       output_every=10**9))
        report = mass_balance(traj)
        deposited = float(sched.integral_to(t_end).sum())
        worst_ratio = max(worst_ratio,
                          report.max_defect / (1.0 + deposited))
    _report(6, "growth mass law", worst_ratio <= 1e-8,
            f"worst defect ratio {worst_ratio:.3e} (tol 1e-8) over 10 runs")


# -------------------------------------------------------------------- 7 ----

def test_07_constant_composition_deposition():
    # flux = composition times a piecewise rate: the uniform profile is an
    # exact solution and the thickness is piecewise-linear arithmetic
    c_full = np.array([0.5, 0.2, 0.3])  # solvent + two species
    rates = (0.25, 0.1)
    sched = FluxSchedule((0.6,), np.outer(rates, c_full), horizon=1.0)
    e0 = 0.3
    grid = Grid1D(1.0, 25)
    field = Field.from_initial(grid, np.tile(c_full[1:], (25, 1)))
    K = CoefficientMatrix([[0, 1, 2], [1, 0, 3], [2, 3, 0]])
    traj = run_moving(field, K, sched, e0,
                      SolverConfig(dt=4e-2, t_end=1.0))
    profile_err = max(float(np.abs(s.u - c_full[1:]).max())
                      for s in traj.states)
    e_err = 0.0
    for t, e in zip(traj.times, traj.thicknesses):
        expected = e0 + rates[0] * min(t, 0.6) + rates[1] * max(t - 0.6, 0.0)
        e_err = max(e_err, abs(e - expected) / expected)
    ok = profile_err <= 1e-10 and e_err <= 1e-14
    _report(7, "constant-composition deposition", ok,
            f"profile err {profile_err:.3e} (tol 1e-10), "
            f"thickness rel err {e_err:.3e}")


# -------------------------------------------------------------------- 8 ----

def test_08_zero_flux_reduction():
    rng = np.random.default_rng(88)
    N = 64
    grid = Grid1D(1.0, N)
    u0 = random_cosine_profile(rng, 2, grid.centers)
    K = random_coefficients(rng, 2)
    cfg = SolverConfig(dt=2e-3, t_end=0.02)
    fixed = run(Field.from_initial(grid, u0), K, cfg)
    sched = FluxSchedule.constant([0.0, 0.0, 0.0], horizon=0.02)
    moving = run_moving(Field.from_initial(grid, u0), K, sched, e0=1.0,
                        config=cfg)
    err = float(np.abs(fixed.states[-1].u - moving.states[-1].u).max())
    _report(8, "zero-flux reduction", err <= 1e-12,
            f"max deviation {err:.3e} (tol 1e-12)")


# -------------------------------------------------------------------- 9 ----

def _binned_pde_profiles(K, u0_fn, cells, times, dt_target, bins):
    grid = Grid1D(1.0, cells)
    field = Field.from_initial(grid, u0_fn(grid.centers))
    group = cells // bins
    out = [_solvent_first(field.u).reshape(bins, group, -1).mean(axis=1)]
    t_prev = 0.0
    for t in times:
        interval = t - t_prev
        steps = max(1, int(np.ceil(interval / dt_target - 1e-12)))
        cfg = SolverConfig(dt=interval / steps, t_end=interval,
                           output_every=10**9)
        field = run(field, K, cfg).states[-1]
        out.append(_solvent_first(field.u).reshape(bins, group, -1)
                   .mean(axis=1))
        t_prev = t
    return out


def test_09a_lattice_matches_heat_kernel():
    # Equal couplings, 4096 sites, 200 replicas: the binned density must
    # track the analytic cosine-mode decay.  This is the most expensive test
    # in the suite (hundreds of billions of candidate events).
    L, R, bins = 4096, 200, 32
    tau = 0.1 / np.pi**2
    x = (np.arange(L) + 0.5) / L
    q = 0.5 + 0.45 * np.cos(np.pi * x)
    reps = sample_replicas(np.stack([1.0 - q, q], axis=1), 1.0, 2027, R)
    K = CoefficientMatrix([[0, 1], [1, 0]])
    traj = kmc_run(reps, K, tau, bins=bins)
    centers = traj.bin_centers
    decay = np.exp(-np.pi**2 * tau)
    exact = 0.5 + 0.45 * decay * np.cos(np.pi * centers)
    initial = 0.5 + 0.45 * np.cos(np.pi * centers)
    err = float(np.abs(traj.density_mean[-1, :, 1] - exact).max())
    motion = float(np.abs(exact - initial).max())
    # guard: the profile must have moved well beyond the tolerance, so
    # agreement is not inherited from the initial condition
    ok = err <= 0.02 and motion > 2 * 0.02
    _report(9, "lattice heat-kernel match", ok,
            f"sup distance {err:.4f} (tol 0.02), profile moved {motion:.4f}")


def test_09b_lattice_pde_distance_shrinks_with_size():
    # Generic two-species couplings: the KMC-to-PDE distance must decrease
    # monotonically as the lattice grows through 512, 1024, 2048 sites.
    K = CoefficientMatrix([[0, 1.0, 1.5], [1.0, 0, 0.8], [1.5, 0.8, 0]])
    tau, bins, R, seed = 0.015, 32, 60, 2026
    times = [tau / 4, tau / 2, 3 * tau / 4, tau]

    def u0_fn(x):
        return np.stack([0.35 + 0.15 * np.cos(np.pi * x),
                         0.30 - 0.10 * np.cos(np.pi * x)], axis=1)

    pde = _binned_pde_profiles(K, u0_fn, 128, times, times[0] / 50, bins)
    dists = []
    for L in (512, 1024, 2048):
        xs = (np.arange(L) + 0.5) / L
        probs = _solvent_first(u0_fn(xs))
        reps = sample_replicas(probs, 1.0, seed, R)
        traj = kmc_run(reps, K, tau, output_times=times, bins=bins)
        sup = [float(np.abs(pde[ti] - traj.density_mean[ti]).max())
               for ti in range(1, len(times) + 1)]
        dists.append(float(np.mean(sup)))
    ok = dists[0] > dists[1] > dists[2]
    _report(9, "lattice-PDE distance trend", ok,
            "distances " + ", ".join(f"{d:.4f}" for d in dists)
            + " over L = 512, 1024, 2048")


# ------------------------------------------------------------------- 10 ----

def test_10_byte_identical_reruns(tmp_path):
    configs = {
        "fixed": {
            "mode": "fixed", "species": 2,
            "coefficients": [[0, 1, 2], [1, 0, 3], [2, 3, 0]],
            "grid": {"cells": 16, "length": 1.0},
            "solver": {"dt": 1e-3, "t_end": 1e-2},
            "initial": {"preset": "cosine", "mean": [0.3, 0.25],
                        "amplitude": [0.1, -0.05]},
        },
        "moving": {
            "mode": "moving", "species": 1,
            "coefficients": [[0, 1], [1, 0]],
            "grid": {"cells": 12, "initial_thickness": 0.4},
            "solver": {"dt": 5e-3, "t_end": 0.05},
            "initial": {"preset": "uniform", "values": [0.4]},
            "flux_schedule": {"values": [[0.05, 0.1]]},
        },
        "lattice": {
            "mode": "lattice", "species": 1,
            "coefficients": [[0, 1], [1, 0]],
            "seed": 99,
            "lattice": {"sites": 256, "replicas": 3, "bins": 8,
                        "t_end": 1e-3, "output_times": [5e-4]},
            "initial": {"preset": "cosine", "mean": [0.5],
                        "amplitude": [0.3]},
        },
        "check-structure": {
            "mode": "check-structure", "species": 2,
            "coefficients": [[0, 1, 2], [1, 0, 3], [2, 3, 0]],
            "structure": {"samples": 500, "directions_per_sample": 16},
        },
    }
    mismatches = []
    for name, payload in configs.items():
        cfgfile = tmp_path / f"{name}.json"
        cfgfile.write_text(json.dumps(payload))
        dirs = [tmp_path / f"{name}_{i}" for i in (1, 2)]
        for out in dirs:
            code = run_experiment(cfgfile, output_dir=out, seed=7,
                                  expected_mode=payload["mode"])
            assert code == 0, f"{name} run failed"
        names = sorted(p.name for p in dirs[0].iterdir())
        if names != sorted(p.name for p in dirs[1].iterdir()):
            mismatches.append(f"{name}: artifact sets differ")
            continue
        for fname in names:
            if (dirs[0] / fname).read_bytes() != (dirs[1] / fname).read_bytes():
                mismatches.append(f"{name}/{fname}")
    _report(10, "byte-identical reruns", not mismatches,
            "; ".join(mismatches) if mismatches
            else "four modes, every artifact identical")
