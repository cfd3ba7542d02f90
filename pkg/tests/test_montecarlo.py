"""Monte Carlo experiment drivers: determinism, coverage, comparisons."""

import numpy as np
import pytest

from eivpred import montecarlo
from eivpred.errors import InvalidInput

from conftest import make_abs_spec, make_linear_spec, make_quadratic_spec


def coverage_config(**overrides):
    base = dict(
        spec=make_linear_spec(sigma_e=[[0.0]]),
        n_grid=(800,),
        replications=2000,
        alphas=(0.5,),
        master_seed=101,
        threads=2,
        region_kinds=("chebyshev", "chi_square"),
        purely_normal=True,
    )
    base.update(overrides)
    return montecarlo.ExperimentConfig(**base)


class TestConfig:
    def test_ascending_grid_required(self):
        with pytest.raises(InvalidInput):
            montecarlo.ExperimentConfig(
                spec=make_linear_spec(), n_grid=(100, 100), replications=2, master_seed=0
            )

    def test_replication_floor(self):
        with pytest.raises(InvalidInput):
            montecarlo.ExperimentConfig(
                spec=make_linear_spec(), n_grid=(100,), replications=0, master_seed=0
            )


class TestConsistency:
    def test_zero_noise_errors_vanish(self):
        spec = make_linear_spec(
            sigma_e=[[0.0]], sigma_eps=[[0.0]], sigma_delta=[[0.0]], sigma_eps_delta=[[0.0]]
        )
        cfg = montecarlo.ExperimentConfig(
            spec=spec, n_grid=(100, 400), replications=20, master_seed=3
        )
        report = montecarlo.run_consistency(cfg)
        for n in (100, 400):
            assert report.value("median_abs_prediction_error", n=n) <= 1e-10
            assert report.value("failure_rate", n=n) == 0.0

    def test_errors_shrink_with_n(self):
        cfg = montecarlo.ExperimentConfig(
            spec=make_linear_spec(), n_grid=(500, 8000), replications=60, master_seed=5
        )
        report = montecarlo.run_consistency(cfg)
        small = report.value("median_abs_prediction_error", n=500)
        large = report.value("median_abs_prediction_error", n=8000)
        assert large < small

    def test_mean_prediction_tracked_and_small(self):
        spec = make_linear_spec(sigma_eps_delta=[[0.2]])
        cfg = montecarlo.ExperimentConfig(
            spec=spec,
            n_grid=(20_000,),
            replications=40,
            master_seed=7,
            mean_prediction=True,
        )
        report = montecarlo.run_consistency(cfg)
        assert report.value("median_rel_mean_prediction_error", n=20_000) < 0.05

    def test_mean_prediction_polynomial_family(self):
        from conftest import make_poly_spec

        cfg = montecarlo.ExperimentConfig(
            spec=make_poly_spec(),
            n_grid=(20_000,),
            replications=40,
            master_seed=9,
            mean_prediction=True,
        )
        report = montecarlo.run_consistency(cfg)
        assert report.value("median_rel_mean_prediction_error", n=20_000) < 0.05

    def test_consistency_with_nonlinear_family(self):
        from conftest import make_exponential_spec

        cfg = montecarlo.ExperimentConfig(
            spec=make_exponential_spec(sigma2_e=0.05, sigma2_delta=0.5),
            n_grid=(2_000,),
            replications=10,
            master_seed=11,
        )
        report = montecarlo.run_consistency(cfg)
        assert report.value("failure_rate", n=2_000) == 0.0
        assert report.value("median_rel_coef_error", n=2_000) < 0.2


class TestCoverage:
    def test_purely_normal_half_alpha(self):
        report = montecarlo.run_coverage(coverage_config())
        cov = report.value("coverage", n=800, alpha=0.5, kind="chi_square")
        assert abs(cov - 0.5) <= 0.03

    def test_distribution_free_region_wider(self):
        report = montecarlo.run_coverage(coverage_config())
        cheb = report.value("coverage", n=800, alpha=0.5, kind="chebyshev")
        chi = report.value("coverage", n=800, alpha=0.5, kind="chi_square")
        assert cheb >= chi  # nesting on the same draws

    def test_every_coverage_row_has_binomial_se(self):
        report = montecarlo.run_coverage(coverage_config(replications=500))
        rows = [r for r in report.rows if r["statistic"] == "coverage"]
        assert rows
        for row in rows:
            p, reps = row["value"], 500
            assert row["se"] == pytest.approx(np.sqrt(p * (1 - p) / reps), abs=1e-12)

    def test_quadratic_interval_slack_floor_covers_more(self):
        spec = make_quadratic_spec()  # true reliability 0.5
        tight = montecarlo.ExperimentConfig(
            spec=spec,
            n_grid=(2000,),
            replications=800,
            alphas=(0.1,),
            master_seed=17,
            threads=2,
            region_kinds=("quadratic_bound",),
            k0=0.5,
        )
        slack = montecarlo.ExperimentConfig(
            spec=spec,
            n_grid=(2000,),
            replications=800,
            alphas=(0.1,),
            master_seed=17,
            threads=2,
            region_kinds=("quadratic_bound",),
            k0=0.3,
        )
        cov_tight = montecarlo.run_coverage(tight).value(
            "coverage", n=2000, alpha=0.1, kind="quadratic_bound"
        )
        cov_slack = montecarlo.run_coverage(slack).value(
            "coverage", n=2000, alpha=0.1, kind="quadratic_bound"
        )
        assert cov_slack >= cov_tight

    def test_fixed_subject_mode(self):
        cfg = coverage_config(replications=300, fixed_subject=True, alphas=(0.1,))
        report = montecarlo.run_coverage(cfg)
        cov = report.value("coverage", n=800, alpha=0.1, kind="chi_square")
        assert 0.8 <= cov <= 0.99


class TestDeterminism:
    def test_reports_identical_across_thread_counts(self):
        reports = []
        for threads in (1, 3):
            cfg = coverage_config(replications=300, threads=threads)
            reports.append(montecarlo.run_coverage(cfg))
        assert reports[0].to_json() == reports[1].to_json()
        assert reports[0].to_csv() == reports[1].to_csv()

    def test_consistency_report_identical_across_threads(self):
        cfgs = [
            montecarlo.ExperimentConfig(
                spec=make_linear_spec(),
                n_grid=(300, 900),
                replications=40,
                master_seed=23,
                threads=t,
            )
            for t in (1, 4)
        ]
        a, b = (montecarlo.run_consistency(c) for c in cfgs)
        assert a.to_json() == b.to_json()

    def test_wall_clock_not_serialized(self):
        cfg = coverage_config(replications=50)
        report = montecarlo.run_coverage(cfg)
        assert report.elapsed_seconds > 0
        assert "elapsed" not in report.to_json()


class TestAbsFailure:
    def test_vanishing_error_gap_is_negligible(self):
        # in the no-measurement-error limit both predictors are consistent:
        # the gap and both mean squared errors collapse by orders of magnitude
        spec = make_abs_spec(sigma2_delta=1e-4)
        cfg = montecarlo.ExperimentConfig(
            spec=spec, n_grid=(20_000,), replications=1, master_seed=31, test_subjects=5000
        )
        report = montecarlo.run_abs_failure(cfg)
        scale = spec.scale**2 * (spec.latent_var + spec.shift**2)  # ~ E[y^2] size
        assert abs(report.value("mse_gap", n=20_000)) <= 1e-3 * scale
        assert report.value("ls_predictor_mse", n=20_000) <= 1e-3 * scale
        assert report.value("naive_predictor_mse", n=20_000) <= 1e-3 * scale

    def test_gap_positive_under_measurement_error(self):
        cfg = montecarlo.ExperimentConfig(
            spec=make_abs_spec(),
            n_grid=(20_000,),
            replications=1,
            master_seed=37,
            test_subjects=5000,
        )
        report = montecarlo.run_abs_failure(cfg)
        gap = report.value("mse_gap", n=20_000)
        rows = [r for r in report.rows if r["statistic"] == "mse_gap"]
        assert gap > 4 * rows[0]["se"]

    def test_wrong_family_rejected(self):
        cfg = montecarlo.ExperimentConfig(
            spec=make_linear_spec(), n_grid=(100,), replications=1, master_seed=0
        )
        with pytest.raises(InvalidInput):
            montecarlo.run_abs_failure(cfg)
