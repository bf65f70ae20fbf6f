"""Deterministic artifact formatting."""

import json

import numpy as np

from crossdiff.reports import fmt, species_header, write_csv, write_json


class TestFmt:
    def test_floats_round_trip_exactly(self):
        for v in (0.1, 1.0 / 3.0, 1e-300, -4.725e-5, 2.0**-52, 0.0):
            assert float(fmt(v)) == v

    def test_numpy_scalars_match_python_floats(self):
        # numpy 2 reprs its scalars as np.float64(...); the writer must emit
        # the plain digit string instead.
        v = np.float64(0.30000000000000004)
        assert fmt(v) == "0.30000000000000004"
        assert fmt(np.float32(0.5)) == "0.5"

    def test_integers_stay_integers(self):
        assert fmt(7) == "7"
        assert fmt(np.int64(7)) == "7"


class TestWriters:
    def test_csv_is_newline_normalized(self, tmp_path):
        p = tmp_path / "x.csv"
        write_csv(p, ["a", "b"], [[1, 0.5], [2, np.float64(0.25)]])
        raw = p.read_bytes()
        assert raw == b"a,b\n1,0.5\n2,0.25\n"

    def test_json_sorted_with_trailing_newline(self, tmp_path):
        p = tmp_path / "x.json"
        write_json(p, {"zeta": 1, "alpha": {"b": 2, "a": 3}})
        text = p.read_text()
        assert text.endswith("\n")
        assert text.index('"alpha"') < text.index('"zeta"')
        assert json.loads(text) == {"zeta": 1, "alpha": {"b": 2, "a": 3}}

    def test_species_header(self):
        assert species_header(2) == ["u_0", "u_1", "u_2"]
