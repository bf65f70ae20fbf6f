"""Experiment configuration: JSON loading, schema and semantic validation.

One config file describes one experiment.  The JSON schema shipped with the
package (config_schema.json) covers shapes and ranges; this module adds the
semantic checks a schema cannot express: coefficient-matrix symmetry, initial
presets staying inside the simplex, flux vectors matching the species count,
and mode-specific required sections.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import jsonschema
import numpy as np

from .fv_fixed import SolverConfig
from .moving_domain import FluxSchedule
from .simplex import CoefficientMatrix

MODES = ("fixed", "moving", "check-structure", "lattice", "compare")

_REQUIRED_SECTIONS = {
    "fixed": ("grid", "solver", "initial"),
    "moving": ("grid", "solver", "initial", "flux_schedule"),
    "check-structure": (),
    "lattice": ("lattice", "initial"),
    "compare": ("lattice", "solver", "initial"),
}


class ConfigError(ValueError):
    """Configuration is unreadable, schema-invalid, or inconsistent."""


def _schema() -> dict:
    text = resources.files("crossdiff").joinpath(
        "config_schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description ready for dispatch."""

    mode: str
    n: int
    K: CoefficientMatrix
    seed: int
    threads: int
    output_dir: str | None
    grid: dict | None
    solver: SolverConfig | None
    initial: dict | None
    schedule: FluxSchedule | None
    lattice: dict | None
    structure: dict
    compare: dict


def load_config(path) -> dict:
    """Read a JSON config file; raises ConfigError on malformed JSON and
    lets OS-level failures (missing file, permissions) propagate."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return raw


def _simplex_bounds_check(lower: np.ndarray, upper: np.ndarray, what: str):
    """Require componentwise lower >= 0 and sum of uppers <= 1."""
    if np.any(lower < 0.0):
        raise ConfigError(f"{what}: species fractions drop below 0")
    if upper.sum() > 1.0 + 1e-12:
        raise ConfigError(f"{what}: species fractions sum beyond 1")


def _validate_initial(initial: dict, n: int):
    preset = initial["preset"]
    if preset == "uniform":
        vals = np.asarray(initial["values"], dtype=float)
        if vals.shape != (n,):
            raise ConfigError("uniform preset needs one value per species")
        _simplex_bounds_check(vals, vals, "uniform preset")
    elif preset == "cosine":
        mean = np.asarray(initial["mean"], dtype=float)
        amp = np.asarray(initial["amplitude"], dtype=float)
        if mean.shape != (n,) or amp.shape != (n,):
            raise ConfigError("cosine preset needs mean and amplitude "
                              "per species")
        # all species share the cos(pi x / length) phase, so the extremes
        # are mean -/+ |amp| per species and sum(mean) +/- |sum(amp)| total
        lower = mean - np.abs(amp)
        upper = mean.copy()
        _simplex_bounds_check(lower, upper, "cosine preset")
        if mean.sum() + abs(amp.sum()) > 1.0 + 1e-12:
            raise ConfigError("cosine preset: total fraction exceeds 1")
    elif preset == "step":
        left = np.asarray(initial["left"], dtype=float)
        right = np.asarray(initial["right"], dtype=float)
        if left.shape != (n,) or right.shape != (n,):
            raise ConfigError("step preset needs left/right values "
                              "per species")
        _simplex_bounds_check(left, left, "step preset (left)")
        _simplex_bounds_check(right, right, "step preset (right)")
    else:  # unreachable once the schema passed
        raise ConfigError(f"unknown initial preset {preset!r}")


def evaluate_initial(initial: dict, x: np.ndarray, length: float,
                     n: int) -> np.ndarray:
    """Evaluate an initial preset at positions x; returns (len(x), n)."""
    x = np.asarray(x, dtype=float)
    preset = initial["preset"]
    if preset == "uniform":
        vals = np.asarray(initial["values"], dtype=float)
        return np.tile(vals, (x.size, 1))
    if preset == "cosine":
        mean = np.asarray(initial["mean"], dtype=float)
        amp = np.asarray(initial["amplitude"], dtype=float)
        phase = np.cos(np.pi * x / length)
        return mean[None, :] + phase[:, None] * amp[None, :]
    if preset == "step":
        left = np.asarray(initial["left"], dtype=float)
        right = np.asarray(initial["right"], dtype=float)
        cut = float(initial["interface"]) * length
        return np.where((x < cut)[:, None], left[None, :], right[None, :])
    raise ConfigError(f"unknown initial preset {preset!r}")


def parse_config(raw: dict, *, seed=None, output_dir=None,
                 threads=None) -> ExperimentConfig:
    """Validate a raw config dict; keyword overrides win over file values."""
    try:
        jsonschema.validate(raw, _schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"schema violation: {exc.message}") from exc

    mode = raw["mode"]
    n = int(raw["species"])
    K_entries = np.asarray(raw["coefficients"], dtype=float)
    if K_entries.shape != (n + 1, n + 1):
        raise ConfigError(
            f"coefficients must be {(n + 1, n + 1)} for {n} species")
    try:
        K = CoefficientMatrix(K_entries)
    except ValueError as exc:
        raise ConfigError(f"bad coefficient matrix: {exc}") from exc

    for section in _REQUIRED_SECTIONS[mode]:
        if section not in raw:
            raise ConfigError(f"mode {mode!r} requires section {section!r}")

    solver = None
    if "solver" in raw and mode in ("fixed", "moving", "compare"):
        s = raw["solver"]
        try:
            solver = SolverConfig(
                dt=float(s["dt"]), t_end=float(s["t_end"]),
                newton_tol=float(s.get("newton_tol", 1e-11)),
                newton_max_iter=int(s.get("newton_max_iter", 30)),
                dt_min=float(s.get("dt_min", 1e-12)),
                output_every=int(s.get("output_every", 1)))
        except ValueError as exc:
            raise ConfigError(f"bad solver section: {exc}") from exc

    grid = raw.get("grid")
    if mode == "fixed":
        if "cells" not in grid or "length" not in grid:
            raise ConfigError("fixed mode needs grid.cells and grid.length")
    if mode == "moving":
        if "cells" not in grid or "initial_thickness" not in grid:
            raise ConfigError(
                "moving mode needs grid.cells and grid.initial_thickness")

    initial = raw.get("initial")
    if initial is not None:
        _validate_initial(initial, n)

    schedule = None
    if mode == "moving":
        fs = raw["flux_schedule"]
        values = np.asarray(fs["values"], dtype=float)
        if values.ndim != 2 or values.shape[1] != n + 1:
            raise ConfigError(
                "flux vectors must cover species 0..n (solvent first)")
        if solver is None:
            raise ConfigError("moving mode requires a solver section")
        try:
            schedule = FluxSchedule(tuple(fs.get("breakpoints", ())), values,
                                    horizon=solver.t_end)
        except ValueError as exc:
            raise ConfigError(f"bad flux schedule: {exc}") from exc

    lattice = None
    if mode in ("lattice", "compare"):
        lattice = dict(raw["lattice"])
        lattice.setdefault("length", 1.0)
        lattice.setdefault("backend", None)
        if lattice["bins"] > lattice["sites"]:
            raise ConfigError("bins cannot exceed lattice sites")
        if "output_times" in lattice:
            ts = lattice["output_times"]
            if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
                raise ConfigError("lattice output_times must increase")
            if ts and ts[-1] > lattice["t_end"] * (1 + 1e-12):
                raise ConfigError("lattice output_times exceed t_end")

    structure = dict(raw.get("structure", {}))
    structure.setdefault("samples", 10000)
    structure.setdefault("directions_per_sample", 64)

    compare = dict(raw.get("compare", {}))
    if mode == "compare":
        compare.setdefault("pde_cells", 4 * lattice["bins"])
        if compare["pde_cells"] % lattice["bins"] != 0:
            raise ConfigError("compare.pde_cells must be a multiple of bins")
        if solver is None:
            raise ConfigError("compare mode requires a solver section")

    seed = int(raw.get("seed", 0)) if seed is None else int(seed)
    threads = int(raw.get("threads", 1)) if threads is None else int(threads)
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    out = raw.get("output_dir") if output_dir is None else str(output_dir)

    return ExperimentConfig(
        mode=mode, n=n, K=K, seed=seed, threads=threads, output_dir=out,
        grid=grid, solver=solver, initial=initial, schedule=schedule,
        lattice=lattice, structure=structure, compare=compare)
