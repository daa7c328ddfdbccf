from __future__ import annotations

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from zenofisher import __version__
from zenofisher.cli import build_parser, main
from zenofisher.config import ExperimentConfig
from zenofisher.csvio import body, parse_csv
from zenofisher.errors import EvaluationError
from zenofisher.experiments import (
    linear_fit,
    mle_from_config,
    run_crb,
    run_ld,
    run_scaling,
    run_surface,
    simulate_from_config,
    surface_monotone,
)
from zenofisher.fisher import most_probable_survival
from zenofisher.streams import GENERATOR_ID

SMALL_SCALING = {"scaling": {"n_values": [1, 3, 9], "m_values": [1000, 3000, 5000], "batches": 0}}


class TestSurface:
    @pytest.fixture(scope="class")
    @staticmethod
    def table():
        cfg = ExperimentConfig.from_dict({"surface": {"mu1_ns": [5.0, 10.0, 40.0, 100.0],
                                                      "mu2_ns": [5.0, 10.0, 20.0, 40.0, 60.0, 100.0]}})
        return run_surface(cfg)

    def test_reference_cell(self, table):
        mu1, mu2 = table.column("mu1_ns"), table.column("mu2_ns")
        row = np.flatnonzero((mu1 == 10.0) & (mu2 == 60.0))[0]
        assert abs(table.rows[row][2] - 0.9383) <= 1e-3

    def test_skipped(self, table):
        skipped = table.column("skipped").astype(bool)
        mu1, mu2 = table.column("mu1_ns"), table.column("mu2_ns")
        np.testing.assert_array_equal(skipped, mu1 >= mu2)
        assert np.all(np.isnan(table.column("pstar")[skipped].astype(float)))

    def test_monotone(self, table):
        assert surface_monotone(table)

    def test_vanishing_intervals(self):
        cfg = ExperimentConfig.from_dict({"surface": {"mu1_ns": [0.0], "mu2_ns": [40.0, 10.0, 1.0, 0.1]}})
        p = run_surface(cfg).column("pstar").astype(float)
        assert np.all(np.diff(p) > 0)
        assert 1.0 - p[-1] < 1e-5

    def test_normalised_eigenvalue_grows_toward_zeno(self):
        diag = [(a, a + 10.0) for a in (80.0, 40.0, 20.0, 10.0, 5.0)]
        cfg = ExperimentConfig.from_dict({"surface": {"mu1_ns": [d[0] for d in diag],
                                                      "mu2_ns": sorted({d[1] for d in diag})}})
        t = run_surface(cfg)
        pairs = {(r[0], r[1]): (r[2], r[4]) for r in t.rows}
        vals = [pairs[d] for d in diag]
        assert all(b[0] > a[0] for a, b in zip(vals, vals[1:]))
        assert all(b[1] > a[1] for a, b in zip(vals, vals[1:]))

    def test_metadata(self, table):
        assert table.metadata["generator"] == GENERATOR_ID
        assert table.metadata["artifact_version"] == __version__
        assert len(table.metadata["config_sha256"]) == 64


class TestScaling:
    @pytest.mark.parametrize("cal, target", [("khz", 6.47e-6), ("mhz", 6.47)])
    def test_per_spin(self, cal, target):
        t = run_scaling(ExperimentConfig.from_dict(SMALL_SCALING).with_calibration(cal))
        n, m = t.column("n"), t.column("m")
        f = t.column("fisher_closed_form").astype(float)
        sel = m == 5000
        np.testing.assert_allclose(f[sel] / n[sel], target, rtol=0.02)
        valid = t.column("zeno_valid").astype(bool)
        assert np.all(valid) == (cal == "khz") and not np.any(valid & (cal == "mhz"))

    def test_fits(self):
        t = run_scaling(ExperimentConfig.from_dict(SMALL_SCALING))
        fits = t.companion
        r2 = [row[5] for row in fits.rows if row[0] in ("fisher_closed_form", "fisher_finite_difference")]
        assert len(r2) == 12
        assert min(r2) >= 0.999

    def test_finite_difference_column(self):
        t = run_scaling(ExperimentConfig.from_dict(SMALL_SCALING))
        fd = t.column("fisher_finite_difference").astype(float)
        closed = t.column("fisher_closed_form").astype(float)
        # exact Fisher information lies below the leading-order value
        assert np.all(fd < closed) and np.all(fd > 0.9 * closed)
        mhz = run_scaling(ExperimentConfig.from_dict(SMALL_SCALING).with_calibration("mhz"))
        assert np.all(np.isnan(mhz.column("fisher_finite_difference").astype(float)))

    def test_empirical_column(self):
        cfg = ExperimentConfig.from_dict({"scaling": {"n_values": [9], "m_values": [5000], "batches": 5,
                                                      "runs_per_batch": 2000}})
        t = run_scaling(cfg)
        emp = float(t.column("fisher_empirical")[0])
        assert t.column("empirical_ok")[0]
        assert 0.1 < emp / float(t.column("fisher_closed_form")[0]) < 10

    def test_linear_fit(self):
        a, b, r2 = linear_fit([1, 2, 3], [3, 5, 7])
        assert (a, b, r2) == pytest.approx((2.0, 1.0, 1.0))


class TestOtherExperiments:
    def test_ld(self):
        cfg = ExperimentConfig.from_dict({"ld": {"m_values": [10, 100, 1000], "runs": 500}})
        t = run_ld(cfg)
        assert t.header[0] == "m" and len(t.rows) == 3
        assert -0.6 < t.metadata["loglog_slope"] < -0.4

    def test_crb_small(self):
        cfg = ExperimentConfig.from_dict({"runs": 1000, "crb": {"batches": 4}})
        t = run_crb(cfg)
        assert len(t.rows) == 4
        assert t.metadata["saturation_ratio"] == t.result.saturation_ratio

    def test_crb_outside_window(self):
        with pytest.raises(EvaluationError):
            run_crb(ExperimentConfig.from_dict().with_calibration("mhz"))

    def test_simulate_and_mle(self):
        cfg = ExperimentConfig.from_dict({"runs": 2000})
        ens = simulate_from_config(cfg)
        assert ens.runs == 2000
        from zenofisher.experiments import _survival, _uniform

        p = most_probable_survival(_uniform(cfg), _survival(cfg), cfg.m)
        assert mle_from_config(p, cfg) == pytest.approx(60e-9, abs=1e-12)


class TestCli:
    def test_parser(self):
        parser = build_parser()
        for cmd in ("surface", "scaling", "crb", "ld", "validate"):
            args = parser.parse_args([cmd, "--seed", "3", "--threads", "2", "--calibration", "mhz"])
            assert args.command == cmd and args.seed == 3 and args.threads == 2 and args.calibration == "mhz"

    def test_scaling_byte_identical(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"scaling": {"n_values": [1, 9], "m_values": [1000, 5000], "batches": 2,
                                               "runs_per_batch": 3000}}))
        outs = []
        for i, threads in enumerate(("1", "2")):
            out = tmp_path / f"s{i}.csv"
            assert main(["scaling", "--config", str(cfg), "--out", str(out), "--threads", threads]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        assert (tmp_path / "s0.fits.csv").exists()
        meta, header, rows = parse_csv(outs[0].decode())
        assert meta["seed"] == "1" and header[:3] == ["n", "m", "fisher_closed_form"] and len(rows) == 4

    def test_seed_flag_changes_output(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"ld": {"m_values": [10, 100], "runs": 200}}))
        texts = []
        for seed in ("1", "2"):
            out = tmp_path / f"ld{seed}.csv"
            main(["ld", "--config", str(cfg), "--seed", seed, "--out", str(out)])
            texts.append(out.read_text())
        assert body(texts[0]) != body(texts[1])

    def test_surface_stdout(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"surface": {"mu1_ns": [10.0], "mu2_ns": [60.0]}}))
        assert main(["surface", "--config", str(cfg)]) == 0
        meta, header, rows = parse_csv(capsys.readouterr().out)
        assert meta["command"] == "surface"
        assert abs(float(rows[0][2]) - 0.9383) <= 1e-3

    def test_error_exit_code(self, capsys):
        assert main(["crb", "--calibration", "mhz"]) == 2
        assert "EvaluationError" in capsys.readouterr().err

    def test_bad_threads(self):
        assert main(["surface", "--threads", "0"]) == 2

    def test_validate_subset(self, tmp_path, capsys):
        out = tmp_path / "v.csv"
        assert main(["validate", "--criteria", "3,4", "--out", str(out)]) == 0
        err = capsys.readouterr().err
        assert "PASS [3]" in err and "PASS [4]" in err
        meta, header, rows = parse_csv(out.read_text())
        assert meta["failed"] == "0"

    def test_validate_failure_exit(self, capsys):
        assert main(["validate", "--criteria", "7"]) == 1
        assert "FAIL [7]" in capsys.readouterr().err

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "zenofisher", "--version"], capture_output=True, text=True)
        assert proc.returncode == 0 and __version__ in proc.stdout
