"""Command-line interface: config handling, outputs, exit codes."""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from eivpred import models
from eivpred.cli import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, main

DATA_DIR = Path(__file__).parent / "data"


def linear_spec_dict():
    return {
        "family": "linear",
        "intercept": [1.0],
        "z_slopes": [[0.5]],
        "latent_slopes": [[1.0]],
        "latent_mean": [0.5],
        "latent_cov": [[1.0]],
        "errors": {
            "sigma_e": [[0.0]],
            "sigma_eps": [[0.3]],
            "sigma_delta": [[0.5]],
            "sigma_eps_delta": [[0.1]],
        },
        "z_dist": {"kind": "gaussian", "mean": [0.0], "cov": [[1.0]]},
    }


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload, indent=2))
    return str(path)


class TestSimulate:
    def test_writes_files_with_row_count(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "sim.json",
            {"spec": linear_spec_dict(), "n": 25, "seed": 3, "out": str(tmp_path / "ds")},
        )
        assert main(["simulate", "--config", cfg]) == EXIT_OK
        rows = (tmp_path / "ds.csv").read_text().strip().splitlines()
        assert len(rows) == 26  # header + n
        data, spec = models.load_dataset(tmp_path / "ds")
        assert data.n == 25
        assert models.validate(spec) == []

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "sim.json",
            {"spec": linear_spec_dict(), "n": 10, "seed": 9, "out": str(tmp_path / "a")},
        )
        main(["simulate", "--config", cfg])
        first = (tmp_path / "a.csv").read_bytes()
        main(["simulate", "--config", cfg])
        assert (tmp_path / "a.csv").read_bytes() == first

    def test_seed_override_changes_data(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "sim.json",
            {"spec": linear_spec_dict(), "n": 10, "seed": 9, "out": str(tmp_path / "b")},
        )
        main(["simulate", "--config", cfg])
        base = (tmp_path / "b.csv").read_bytes()
        main(["simulate", "--config", cfg, "--seed", "10"])
        assert (tmp_path / "b.csv").read_bytes() != base

    def test_invalid_spec_exits_2_with_violations(self, tmp_path, capsys):
        spec = linear_spec_dict()
        spec["errors"]["sigma_eps_delta"] = [[2.0]]  # |corr| > 1
        cfg = write_config(
            tmp_path, "bad.json", {"spec": spec, "n": 10, "seed": 1, "out": str(tmp_path / "x")}
        )
        assert main(["simulate", "--config", cfg]) == EXIT_CONFIG
        assert "not PSD" in capsys.readouterr().err

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "unk.json",
            {"spec": linear_spec_dict(), "n": 5, "seed": 1, "out": "x", "bogus": True},
        )
        assert main(["simulate", "--config", cfg]) == EXIT_CONFIG
        assert "bogus" in capsys.readouterr().err


class TestTransform:
    def test_error_free_spec_echoes_parameters(self, tmp_path, capsys):
        spec = {
            "family": "exponential",
            "scale": 2.0,
            "rate": 0.7,
            "latent_mean": 0.3,
            "latent_var": 1.0,
            "sigma2_e": 0.1,
            "sigma2_delta": 0.0,
        }
        cfg = write_config(tmp_path, "tr.json", {"spec": spec})
        assert main(["transform", "--config", cfg]) == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["params"]["scale"] == 2.0
        assert out["params"]["rate"] == 0.7

    def test_quadratic_reports_squared_reliability_curvature(self, tmp_path, capsys):
        spec = {
            "family": "quadratic",
            "intercept": 0.4,
            "slope": 0.7,
            "curvature": 1.3,
            "latent_mean": 1.0,
            "latent_var": 1.0,
            "sigma2_e": 0.2,
            "sigma2_delta": 1.0,
        }
        cfg = write_config(tmp_path, "trq.json", {"spec": spec})
        assert main(["transform", "--config", cfg]) == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["params"]["curvature"] == pytest.approx(1.3 * 0.25, abs=1e-15)

    def test_abs_fields_present(self, tmp_path, capsys):
        spec = {
            "family": "absolute_value",
            "scale": 1.0,
            "shift": 1.0,
            "latent_mean": 0.0,
            "latent_var": 1.0,
            "sigma2_e": 0.1,
            "sigma2_delta": 1.0,
        }
        cfg = write_config(tmp_path, "tra.json", {"spec": spec})
        assert main(["transform", "--config", cfg]) == EXIT_OK
        params = json.loads(capsys.readouterr().out)["params"]
        assert {"scale", "gain", "offset"} <= set(params)


class TestFitPredict:
    def test_noiseless_dataset_near_zero_residual(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((50, 1))
        z = rng.standard_normal((50, 1))
        y = 1.0 + 0.5 * z + 2.0 * x
        data = models.Dataset(y=y, z=z, x=x, seed=0)
        spec = models.spec_from_dict(linear_spec_dict())
        models.save_dataset(data, spec, tmp_path / "clean")
        cfg = write_config(
            tmp_path,
            "fp.json",
            {
                "data": str(tmp_path / "clean"),
                "family": "linear",
                "predict": [{"z0": [0.0], "x0": [1.0]}],
            },
        )
        assert main(["fit-predict", "--config", cfg]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["fit"]["residual_moment"][0][0] <= 1e-20
        assert report["predictions"][0]["individual"][0] == pytest.approx(3.0, abs=1e-9)

    def test_golden_report_is_byte_stable(self, tmp_path):
        out = tmp_path / "report.json"
        rc = main(
            [
                "fit-predict",
                "--config",
                str(DATA_DIR / "golden_fit_predict_config.json"),
                "--out",
                str(out),
            ]
        )
        assert rc == EXIT_OK
        assert out.read_bytes() == (DATA_DIR / "golden_fit_predict.json").read_bytes()

    def test_nonlinear_family_fit_predict(self, tmp_path, capsys):
        spec = {
            "family": "absolute_value",
            "scale": 1.0,
            "shift": 1.0,
            "latent_mean": 0.0,
            "latent_var": 1.0,
            "sigma2_e": 0.05,
            "sigma2_delta": 0.5,
        }
        sim = write_config(
            tmp_path, "sim_abs.json", {"spec": spec, "n": 2000, "seed": 5, "out": str(tmp_path / "abs")}
        )
        assert main(["simulate", "--config", sim]) == EXIT_OK
        capsys.readouterr()
        fp = write_config(
            tmp_path,
            "fp_abs.json",
            {
                "data": str(tmp_path / "abs"),
                "family": "absolute_value",
                "predict": [{"x0": 1.0}],
            },
        )
        assert main(["fit-predict", "--config", fp]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["fit"]["converged"] is True
        assert {"scale", "gain", "offset"} <= set(report["fit"]["params"])
        assert np.isfinite(report["predictions"][0]["individual"][0])

    def test_chisquare_without_assertion_carries_note(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "fp2.json",
            {
                "data": str(DATA_DIR / "golden_dataset"),
                "family": "linear",
                "predict": [{"z0": [0.0], "x0": [0.5]}],
                "regions": [{"kind": "chi_square", "alpha": 0.05}],
            },
        )
        assert main(["fit-predict", "--config", cfg]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        notes = report["predictions"][0]["regions"][0]["notes"]
        assert any("purely-normal" in n for n in notes)


class TestExperiment:
    def experiment_config(self, tmp_path, **extra):
        payload = {
            "suite": "coverage",
            "spec": linear_spec_dict(),
            "n_grid": [500],
            "replications": 50,
            "alphas": [0.05],
            "master_seed": 11,
            "region_kinds": ["chebyshev", "chi_square"],
            "purely_normal": True,
            "out": str(tmp_path / "report"),
        }
        payload.update(extra)
        return write_config(tmp_path, "exp.json", payload)

    def test_smoke_grid_completes_quickly(self, tmp_path):
        start = time.perf_counter()
        cfg = self.experiment_config(tmp_path)
        assert main(["experiment", "--config", cfg]) == EXIT_OK
        assert time.perf_counter() - start < 60.0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["experiment"] == "coverage"
        csv_text = (tmp_path / "report.csv").read_text()
        assert csv_text.splitlines()[0] == "experiment,n,alpha,kind,statistic,value,se"

    def test_check_pass_and_fail_exit_codes(self, tmp_path):
        ok_cfg = self.experiment_config(
            tmp_path,
            checks=[
                {"statistic": "coverage", "kind": "chebyshev", "alpha": 0.05, "n": 500, "min": 0.9}
            ],
        )
        assert main(["experiment", "--config", ok_cfg, "--check"]) == EXIT_OK
        bad_cfg = self.experiment_config(
            tmp_path,
            checks=[
                {"statistic": "coverage", "kind": "chebyshev", "alpha": 0.05, "n": 500, "min": 1.1}
            ],
        )
        assert main(["experiment", "--config", bad_cfg, "--check"]) == EXIT_CHECK_FAILED

    def test_seed_override_reproducible(self, tmp_path):
        cfg = self.experiment_config(tmp_path)
        main(["experiment", "--config", cfg, "--seed", "99"])
        first = (tmp_path / "report.json").read_bytes()
        main(["experiment", "--config", cfg, "--seed", "99"])
        assert (tmp_path / "report.json").read_bytes() == first
        main(["experiment", "--config", cfg, "--seed", "100"])
        assert (tmp_path / "report.json").read_bytes() != first

    def test_threads_do_not_change_output(self, tmp_path):
        cfg = self.experiment_config(tmp_path)
        main(["experiment", "--config", cfg, "--threads", "1"])
        one = (tmp_path / "report.json").read_bytes()
        main(["experiment", "--config", cfg, "--threads", "3"])
        assert (tmp_path / "report.json").read_bytes() == one

    def test_thread_count_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("EIVPRED_THREADS", "2")
        cfg = self.experiment_config(tmp_path)
        assert main(["experiment", "--config", cfg]) == EXIT_OK
