from __future__ import annotations

import json
import math

import numpy as np
import pytest

from zenofisher.config import DEFAULTS, ExperimentConfig
from zenofisher.csvio import body, format_value, parse_csv, render_csv, write_csv
from zenofisher.distributions import Dirac, Uniform
from zenofisher.errors import ArgumentError

from conftest import KHZ, NS


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig.from_dict()
        assert cfg.n == 9 and cfg.m == 5000 and cfg.k_moments == 8 and cfg.mode == "product"
        assert cfg.omega == pytest.approx(KHZ)
        d = cfg.distribution()
        assert isinstance(d, Uniform) and d.mu1 == pytest.approx(10 * NS) and d.mu2 == pytest.approx(60 * NS)

    def test_json_roundtrip(self, tmp_path):
        raw = {"model": {"n": 3, "alphas": "all_z", "state": "ghz"}, "m": 10, "runs": 5,
               "distribution": {"type": "dirac", "mu_ns": 20.0}}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(raw))
        cfg = ExperimentConfig.from_json(path)
        assert cfg.n == 3 and cfg.m == 10 and cfg.runs == 5
        assert isinstance(cfg.distribution(), Dirac)
        np.testing.assert_allclose(cfg.initial_state()[[0, -1]], [1 / math.sqrt(2), -1j / math.sqrt(2)])
        np.testing.assert_array_equal(cfg.alphas(), np.tile([0.0, 0.0, 1.0], (3, 1)))

    def test_explicit_alphas(self):
        cfg = ExperimentConfig.from_dict({"model": {"n": 2, "alphas": [[1, 0, 0], [0, 1, 0]]}})
        assert cfg.spin_model().dim == 4
        with pytest.raises(ArgumentError):
            cfg.alphas(3)

    def test_calibration(self):
        cfg = ExperimentConfig.from_dict().with_calibration("mhz")
        assert cfg.omega == pytest.approx(2 * math.pi * 5e6)
        with pytest.raises(ArgumentError):
            cfg.with_calibration("ghz")

    def test_seed_and_hash(self):
        a = ExperimentConfig.from_dict()
        b = a.with_seed(2)
        assert a.seed == 1 and b.seed == 2
        assert a.hash != b.hash
        assert a.hash == ExperimentConfig.from_dict().hash
        with pytest.raises(ArgumentError):
            a.with_seed(-3)

    def test_section_merge(self):
        cfg = ExperimentConfig.from_dict({"scaling": {"n_values": [1, 2]}})
        n_values, m_values = cfg.scaling_sweep()
        assert n_values == [1, 2]
        assert m_values == DEFAULTS["scaling"]["m_values"]

    def test_grid_forms(self):
        cfg = ExperimentConfig.from_dict({"surface": {"mu1_ns": [10, 20], "mu2_ns": {"start": 30, "stop": 60,
                                                                                    "num": 4}}})
        g1, g2 = cfg.surface_grid()
        np.testing.assert_array_equal(g1, [10, 20])
        np.testing.assert_allclose(g2, [30, 40, 50, 60])

    @pytest.mark.parametrize("raw", [
        {"unknown": 1},
        {"model": {"bogus": 1}},
        {"model": {"n": 0}},
        {"model": {"state": "mixed"}},
        {"model": {"alphas": "all_w"}},
        {"model": {"omega_hz": -1.0}},
        {"m": 0},
        {"runs": 0},
        {"k_moments": 9},
        {"mode": "parallel"},
        {"distribution": {"type": "uniform", "mu1_ns": 60.0, "mu2_ns": 10.0}},
        {"distribution": {"type": "dirac"}},
        {"distribution": {"type": "gamma"}},
        {"seed": 1 << 64},
    ])
    def test_invalid(self, raw):
        with pytest.raises(ArgumentError):
            ExperimentConfig.from_dict(raw)

    def test_ld_sweep_ascending(self):
        with pytest.raises(ArgumentError):
            ExperimentConfig.from_dict({"ld": {"m_values": [100, 10]}}).ld_sweep()

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        with pytest.raises(ArgumentError):
            ExperimentConfig.from_json(path)


class TestCsv:
    def test_format(self):
        assert format_value(0.1) == "0.10000000000000001"
        assert format_value(1.0 / 3.0) == "0.33333333333333331"
        assert format_value(True) == "true"
        assert format_value(np.int64(5)) == "5"
        assert format_value(math.nan) == "nan"
        assert format_value(-math.inf) == "-inf"

    def test_float_roundtrip(self):
        rng = np.random.default_rng(0)
        for x in rng.normal(size=100) * 10.0 ** rng.integers(-20, 20, size=100):
            assert float(format_value(float(x))) == x

    def test_render_and_parse(self, tmp_path):
        text = write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 0.5], [2, math.nan]], {"seed": 7, "note": "x"})
        assert (tmp_path / "t.csv").read_text() == text
        meta, header, rows = parse_csv(text)
        assert meta == {"seed": "7", "note": "x"}
        assert header == ["a", "b"]
        assert rows == [["1", "0.5"], ["2", "nan"]]
        assert body(text) == "a,b\n1,0.5\n2,nan\n"

    def test_row_width(self):
        with pytest.raises(ArgumentError):
            render_csv(["a"], [[1, 2]])

    def test_multiline_metadata(self):
        with pytest.raises(ArgumentError):
            render_csv(["a"], [], {"k": "x\ny"})
