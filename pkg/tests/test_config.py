"""Config loading, schema gating, and semantic validation."""

import json

import numpy as np
import pytest

from crossdiff.config import (ConfigError, evaluate_initial, load_config,
                              parse_config)


def base_fixed():
    return {
        "mode": "fixed",
        "species": 2,
        "coefficients": [[0, 1, 2], [1, 0, 3], [2, 3, 0]],
        "grid": {"cells": 16, "length": 1.0},
        "solver": {"dt": 1e-3, "t_end": 1e-2},
        "initial": {"preset": "uniform", "values": [0.3, 0.25]},
    }


def base_moving():
    cfg = base_fixed()
    cfg.update({
        "mode": "moving",
        "grid": {"cells": 16, "initial_thickness": 0.5},
        "flux_schedule": {"values": [[0.0, 0.1, 0.05]]},
    })
    return cfg


def base_lattice():
    return {
        "mode": "lattice",
        "species": 1,
        "coefficients": [[0, 1], [1, 0]],
        "lattice": {"sites": 64, "replicas": 2, "bins": 8, "t_end": 1e-3},
        "initial": {"preset": "uniform", "values": [0.5]},
    }


class TestLoadConfig:
    def test_reads_json_object(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(base_fixed()))
        assert load_config(p)["mode"] == "fixed"

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_config(tmp_path / "absent.json")

    def test_malformed_json_raises_config_error(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError, match="JSON"):
            load_config(p)

    def test_non_object_root_rejected(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="object"):
            load_config(p)


class TestSchemaGate:
    def test_unknown_top_level_key(self):
        cfg = base_fixed()
        cfg["typo_section"] = {}
        with pytest.raises(ConfigError, match="schema"):
            parse_config(cfg)

    def test_unknown_mode(self):
        cfg = base_fixed()
        cfg["mode"] = "implode"
        with pytest.raises(ConfigError, match="schema"):
            parse_config(cfg)

    def test_negative_coefficient(self):
        cfg = base_fixed()
        cfg["coefficients"][0][1] = -1.0
        with pytest.raises(ConfigError, match="schema"):
            parse_config(cfg)

    def test_solver_requires_dt_and_t_end(self):
        cfg = base_fixed()
        del cfg["solver"]["dt"]
        with pytest.raises(ConfigError, match="schema"):
            parse_config(cfg)

    def test_initial_preset_shape_enforced(self):
        cfg = base_fixed()
        cfg["initial"] = {"preset": "cosine", "values": [0.1, 0.1]}
        with pytest.raises(ConfigError, match="schema"):
            parse_config(cfg)


class TestSemantics:
    def test_valid_fixed_parses(self):
        cfg = parse_config(base_fixed())
        assert cfg.mode == "fixed"
        assert cfg.n == 2
        assert cfg.K.alpha == 1.0
        assert cfg.solver.dt == 1e-3
        assert cfg.seed == 0 and cfg.threads == 1

    def test_valid_moving_parses(self):
        cfg = parse_config(base_moving())
        assert cfg.schedule is not None
        assert cfg.schedule.horizon == 1e-2
        assert cfg.schedule.n_species == 3

    def test_valid_lattice_parses_with_defaults(self):
        cfg = parse_config(base_lattice())
        assert cfg.lattice["length"] == 1.0
        assert cfg.lattice["backend"] is None

    def test_check_structure_defaults(self):
        cfg = parse_config({"mode": "check-structure", "species": 2,
                            "coefficients": base_fixed()["coefficients"]})
        assert cfg.structure == {"samples": 10000,
                                 "directions_per_sample": 64}

    def test_coefficient_shape_mismatch(self):
        cfg = base_fixed()
        cfg["species"] = 3
        with pytest.raises(ConfigError, match="coefficients"):
            parse_config(cfg)

    def test_asymmetric_coefficients(self):
        cfg = base_fixed()
        cfg["coefficients"] = [[0, 1, 2], [1, 0, 3], [2, 4, 0]]
        with pytest.raises(ConfigError, match="symmetric"):
            parse_config(cfg)

    def test_missing_required_section(self):
        cfg = base_fixed()
        del cfg["initial"]
        with pytest.raises(ConfigError, match="requires section"):
            parse_config(cfg)

    def test_uniform_preset_outside_simplex(self):
        cfg = base_fixed()
        cfg["initial"] = {"preset": "uniform", "values": [0.7, 0.4]}
        with pytest.raises(ConfigError, match="beyond 1"):
            parse_config(cfg)

    def test_cosine_preset_negative_trough(self):
        cfg = base_fixed()
        cfg["initial"] = {"preset": "cosine", "mean": [0.2, 0.2],
                          "amplitude": [0.3, 0.0]}
        with pytest.raises(ConfigError, match="below 0"):
            parse_config(cfg)

    def test_cosine_preset_total_overflow(self):
        cfg = base_fixed()
        cfg["initial"] = {"preset": "cosine", "mean": [0.5, 0.4],
                          "amplitude": [0.1, 0.05]}
        with pytest.raises(ConfigError, match="exceeds 1"):
            parse_config(cfg)

    def test_step_preset_bad_side(self):
        cfg = base_fixed()
        cfg["initial"] = {"preset": "step", "left": [0.8, 0.4],
                          "right": [0.1, 0.1], "interface": 0.5}
        with pytest.raises(ConfigError, match="beyond 1"):
            parse_config(cfg)

    def test_flux_vector_width_mismatch(self):
        cfg = base_moving()
        cfg["flux_schedule"] = {"values": [[0.1, 0.1]]}
        with pytest.raises(ConfigError, match="species 0..n"):
            parse_config(cfg)

    def test_breakpoint_outside_horizon(self):
        cfg = base_moving()
        cfg["flux_schedule"] = {"breakpoints": [5.0],
                                "values": [[0, 0.1, 0], [0, 0, 0.1]]}
        with pytest.raises(ConfigError, match="flux schedule"):
            parse_config(cfg)

    def test_bins_exceed_sites(self):
        cfg = base_lattice()
        cfg["lattice"]["bins"] = 128
        with pytest.raises(ConfigError, match="bins"):
            parse_config(cfg)

    def test_lattice_output_times_checked(self):
        cfg = base_lattice()
        cfg["lattice"]["output_times"] = [2e-3]
        with pytest.raises(ConfigError, match="t_end"):
            parse_config(cfg)
        cfg["lattice"]["output_times"] = [5e-4, 5e-4]
        with pytest.raises(ConfigError, match="increase"):
            parse_config(cfg)

    def test_compare_pde_cells_multiple_of_bins(self):
        cfg = base_lattice()
        cfg["mode"] = "compare"
        cfg["solver"] = {"dt": 1e-4, "t_end": 1e-3}
        cfg["compare"] = {"pde_cells": 12}
        with pytest.raises(ConfigError, match="multiple"):
            parse_config(cfg)
        cfg["compare"] = {"pde_cells": 16}
        assert parse_config(cfg).compare["pde_cells"] == 16

    def test_compare_defaults_pde_cells(self):
        cfg = base_lattice()
        cfg["mode"] = "compare"
        cfg["solver"] = {"dt": 1e-4, "t_end": 1e-3}
        assert parse_config(cfg).compare["pde_cells"] == 32

    def test_overrides_win_over_file_values(self):
        raw = base_fixed()
        raw["seed"] = 5
        raw["threads"] = 2
        raw["output_dir"] = "from_file"
        cfg = parse_config(raw, seed=9, output_dir="cli_dir", threads=3)
        assert cfg.seed == 9
        assert cfg.threads == 3
        assert cfg.output_dir == "cli_dir"
        kept = parse_config(raw)
        assert kept.seed == 5 and kept.threads == 2
        assert kept.output_dir == "from_file"


class TestEvaluateInitial:
    def test_uniform(self):
        u = evaluate_initial({"preset": "uniform", "values": [0.2, 0.3]},
                             np.array([0.1, 0.9]), 1.0, 2)
        assert np.array_equal(u, [[0.2, 0.3], [0.2, 0.3]])

    def test_cosine_frozen_values(self):
        init = {"preset": "cosine", "mean": [0.5], "amplitude": [0.2]}
        x = np.array([0.0, 0.5, 1.0])
        u = evaluate_initial(init, x, 1.0, 1)
        # cos(0) = 1, cos(pi/2) = 0, cos(pi) = -1
        assert np.allclose(u[:, 0], [0.7, 0.5, 0.3], atol=1e-15)

    def test_cosine_phase_scales_with_length(self):
        init = {"preset": "cosine", "mean": [0.5], "amplitude": [0.2]}
        u = evaluate_initial(init, np.array([2.0]), 2.0, 1)
        assert u[0, 0] == pytest.approx(0.3, abs=1e-15)

    def test_step(self):
        init = {"preset": "step", "left": [0.6], "right": [0.1],
                "interface": 0.25}
        x = np.array([0.1, 0.2, 0.3, 0.9])
        u = evaluate_initial(init, x, 1.0, 1)
        assert np.allclose(u[:, 0], [0.6, 0.6, 0.1, 0.1])
