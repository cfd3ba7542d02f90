"""Monte Carlo experiment drivers.

Turns the asymptotic guarantees of the predictors into finite-sample
empirical checks: consistency curves for the plug-in predictors, coverage
tables for the confidence regions, and the head-to-head comparison that
demonstrates where the naive plug-in predictor fails.

Replications run on a work queue with per-replication counter-based seeds
and are merged in replication order, so a report is byte-identical for a
fixed master seed regardless of the worker count.  Wall-clock time is kept
out of the serialized payload for the same reason.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import EivError, InvalidInput
from .estimators import FittedModel, naive_ols_abs, nls_fit, ols_fit
from .linalg import cholesky_psd
from .models import (
    AbsSpec,
    LinearSpec,
    ModelSpec,
    NewSubject,
    PolynomialSpec,
    QuadraticSpec,
    new_subject,
    sample,
    spec_to_dict,
)
from .predictors import (
    predict_individual,
    predict_mean,
    region_chebyshev,
    region_chisquare,
    region_contains,
    region_quadratic,
)
from .rng import derive_seed, make_rng
from .transform import condition_gaussian, predict_rows, transform

__all__ = ["ExperimentConfig", "McReport", "run_consistency", "run_coverage", "run_abs_failure"]


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Declarative description of one experiment run."""

    spec: ModelSpec
    n_grid: tuple[int, ...]
    replications: int
    alphas: tuple[float, ...] = (0.05,)
    master_seed: int = 0
    threads: int = 1
    region_kinds: tuple[str, ...] = ("chebyshev",)
    purely_normal: bool = False
    k0: Optional[float] = None  # quadratic-interval reliability floor
    fixed_subject: bool = False  # condition on one (z0, x0) instead of redrawing
    mean_prediction: bool = False  # also track the noiseless-value predictor
    degree: Optional[int] = None  # polynomial fit degree; defaults to the model's
    harmonics: int = 1
    test_subjects: int = 1000  # fresh subjects per replication (abs comparison)

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "region_kinds", tuple(self.region_kinds))
        if self.replications < 1:
            raise InvalidInput("replications must be >= 1")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise InvalidInput("n_grid must be strictly ascending")


@dataclass(eq=False)
class McReport:
    """Flat result rows plus provenance.

    Every coverage row carries its binomial standard error.  ``elapsed_seconds``
    is informational only and intentionally excluded from the serialized
    payload so reports stay byte-identical across worker counts.
    """

    experiment: str
    rows: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    elapsed_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "experiment": self.experiment,
            "rows": self.rows,
            "failures": self.failures,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["experiment", "n", "alpha", "kind", "statistic", "value", "se"])
        for row in self.rows:
            writer.writerow(
                [
                    self.experiment,
                    row.get("n", ""),
                    _fmt(row.get("alpha")),
                    row.get("kind", ""),
                    row["statistic"],
                    _fmt(row.get("value")),
                    _fmt(row.get("se")),
                ]
            )
        return buf.getvalue()

    def write(self, prefix) -> tuple[Path, Path]:
        prefix = Path(prefix)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        json_path = prefix.with_suffix(".json")
        csv_path = prefix.with_suffix(".csv")
        json_path.write_text(self.to_json())
        csv_path.write_text(self.to_csv())
        return json_path, csv_path

    def value(self, statistic: str, **keys) -> float:
        """Look up a single row's value (test convenience)."""
        for row in self.rows:
            if row["statistic"] != statistic:
                continue
            if all(row.get(k) == v for k, v in keys.items()):
                return row["value"]
        raise KeyError(f"no row with statistic={statistic!r} and {keys!r}")


def _fmt(v) -> str:
    if v is None or v == "":
        return ""
    return format(float(v), ".17g")


def _provenance(cfg: ExperimentConfig, experiment: str) -> dict:
    return {
        "experiment": experiment,
        "spec": spec_to_dict(cfg.spec),
        "master_seed": cfg.master_seed,
        "n_grid": list(cfg.n_grid),
        "replications": cfg.replications,
        "alphas": list(cfg.alphas),
        "fixed_subject": cfg.fixed_subject,
        "package_version": __version__,
    }


def _fit(cfg: ExperimentConfig, data) -> FittedModel:
    spec = cfg.spec
    if isinstance(spec, LinearSpec):
        return ols_fit(data, "linear")
    if isinstance(spec, PolynomialSpec):
        return ols_fit(data, "polynomial", degree=cfg.degree or spec.degree)
    if isinstance(spec, QuadraticSpec):
        return ols_fit(data, "quadratic")
    return nls_fit(data, spec.family, harmonics=cfg.harmonics)


def _coef_vector(params) -> np.ndarray:
    fields = {
        "linear": ("intercept", "z_slopes", "x_slopes"),
        "polynomial": ("intercept", "z_slopes", "coefs"),
        "quadratic": ("intercept", "slope", "curvature"),
        "exponential": ("scale", "rate"),
        "trigonometric": ("const", "cos_amps", "sin_amps", "freq"),
        "absolute_value": ("scale", "gain", "offset"),
    }[params.family]
    return np.concatenate([np.ravel(getattr(params, f)) for f in fields])


def _known_cross_cov(spec: ModelSpec):
    if isinstance(spec, LinearSpec):
        return spec.errors.sigma_eps_delta
    return float(getattr(spec, "sigma_eps_delta", 0.0))


def _true_mean_point(spec: ModelSpec, best_point: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Noiseless-value predictor from the true model parameters."""
    if isinstance(spec, LinearSpec):
        cross = spec.errors.sigma_eps_delta
        corr = cross @ np.linalg.solve(spec.x_cov, x0 - spec.latent_mean)
        return best_point - corr
    cross = float(getattr(spec, "sigma_eps_delta", 0.0))
    return best_point - cross / spec.x_var * (x0 - spec.latent_mean)


def _conditional_subject(spec: ModelSpec, z0, x0, rng: np.random.Generator) -> NewSubject:
    """Fresh response at a fixed (z0, x0), drawn from the exact conditional law."""
    cg = condition_gaussian(spec)
    m = cg.xi_coef.shape[0]
    mean_xi = cg.xi_offset + cg.xi_coef @ x0
    if isinstance(spec, LinearSpec):
        mu = spec.latent_mean
        sigma_e = spec.errors.sigma_e
    else:
        mu = np.array([spec.latent_mean])
        sigma_e = np.array([[spec.sigma2_e]])
    mean_eps = cg.eps_coef @ (x0 - mu)
    g = cholesky_psd(cg.cond_cov) @ rng.standard_normal(cg.cond_cov.shape[0])
    xi0 = mean_xi + g[:m]
    eps0 = mean_eps + g[m:]
    e0 = cholesky_psd(sigma_e) @ rng.standard_normal(sigma_e.shape[0])
    zrow = np.zeros((1, 0)) if z0 is None else np.asarray(z0, float)[None, :]
    eta0 = spec.regression(zrow, xi0[None, :])[0]
    return NewSubject(
        z0=np.zeros(0) if z0 is None else np.asarray(z0, float),
        x0=np.asarray(x0, float),
        y0=eta0 + e0 + eps0,
        eta0=eta0,
        xi0=xi0,
    )


def _draw_subject(cfg: ExperimentConfig, n_idx: int, rep: int, fixed: Optional[NewSubject]):
    if not cfg.fixed_subject:
        return new_subject(cfg.spec, derive_seed(cfg.master_seed, 2, n_idx, rep))
    rng = make_rng(cfg.master_seed, 3, n_idx, rep)
    return _conditional_subject(cfg.spec, fixed.z0 if fixed.z0.size else None, fixed.x0, rng)


def _fixed_subject(cfg: ExperimentConfig) -> Optional[NewSubject]:
    if not cfg.fixed_subject:
        return None
    return new_subject(cfg.spec, derive_seed(cfg.master_seed, 4))


def _run_tasks(cfg: ExperimentConfig, tasks, worker):
    """Run ``worker(task)`` over all tasks; results in task order."""
    if cfg.threads <= 1:
        return [worker(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(worker, tasks))


def _slope(ns: list[int], values: list[float]) -> float:
    pairs = [(n, v) for n, v in zip(ns, values) if v > 0]
    if len(pairs) < 2:
        return float("nan")
    logs_n = np.log([p[0] for p in pairs])
    logs_v = np.log([p[1] for p in pairs])
    return float(np.polyfit(logs_n, logs_v, 1)[0])


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------


def run_consistency(cfg: ExperimentConfig) -> McReport:
    """Prediction and coefficient errors of the fitted predictor versus the
    true best predictor, across the sample-size grid."""
    t0 = time.perf_counter()
    true_params = transform(cfg.spec)
    true_vec = _coef_vector(true_params)
    true_norm = float(np.linalg.norm(true_vec))
    fixed = _fixed_subject(cfg)
    cross = _known_cross_cov(cfg.spec) if cfg.mean_prediction else None

    report = McReport("consistency", provenance=_provenance(cfg, "consistency"))

    def one(task):
        n_idx, rep = task
        n = cfg.n_grid[n_idx]
        try:
            data = sample(cfg.spec, n, derive_seed(cfg.master_seed, 1, n_idx, rep), keep_hidden=False)
            fit = _fit(cfg, data)
            subject = _draw_subject(cfg, n_idx, rep, fixed)
            z0 = subject.z0 if subject.z0.size else None
            pred = predict_individual(fit, z0, subject.x0)
            best = np.atleast_1d(true_params.predict(z0, subject.x0))
            err = float(np.linalg.norm(pred.point - best))
            coef_rel = float(
                np.linalg.norm(_coef_vector(fit.params) - true_vec) / max(true_norm, 1e-300)
            )
            mean_rel = None
            if cross is not None:
                mpred = predict_mean(fit, z0, subject.x0, cross)
                mtrue = _true_mean_point(cfg.spec, best, subject.x0)
                mean_rel = float(
                    np.linalg.norm(mpred.point - mtrue) / max(float(np.linalg.norm(mtrue)), 1e-12)
                )
            return ("ok", err, coef_rel, mean_rel)
        except EivError as exc:
            return ("fail", str(exc))

    tasks = [(i, r) for i in range(len(cfg.n_grid)) for r in range(cfg.replications)]
    results = _run_tasks(cfg, tasks, one)

    medians = []
    coef_medians = []
    for i, n in enumerate(cfg.n_grid):
        chunk = results[i * cfg.replications : (i + 1) * cfg.replications]
        oks = [r for r in chunk if r[0] == "ok"]
        for r in chunk:
            if r[0] == "fail":
                report.failures.append({"n": n, "message": r[1]})
        if not oks:
            medians.append(float("nan"))
            coef_medians.append(float("nan"))
            continue
        errs = np.array([r[1] for r in oks])
        coefs = np.array([r[2] for r in oks])
        medians.append(float(np.median(errs)))
        coef_medians.append(float(np.median(coefs)))
        report.rows.append(
            {"n": n, "statistic": "median_abs_prediction_error", "value": float(np.median(errs))}
        )
        report.rows.append(
            {"n": n, "statistic": "q90_abs_prediction_error", "value": float(np.quantile(errs, 0.9))}
        )
        report.rows.append(
            {"n": n, "statistic": "median_rel_coef_error", "value": float(np.median(coefs))}
        )
        if cross is not None:
            mean_rels = np.array([r[3] for r in oks])
            report.rows.append(
                {
                    "n": n,
                    "statistic": "median_rel_mean_prediction_error",
                    "value": float(np.median(mean_rels)),
                }
            )
        report.rows.append(
            {"n": n, "statistic": "failure_rate", "value": 1.0 - len(oks) / cfg.replications}
        )
    report.rows.append(
        {"statistic": "prediction_error_loglog_slope", "value": _slope(list(cfg.n_grid), medians)}
    )
    report.rows.append(
        {"statistic": "coef_error_loglog_slope", "value": _slope(list(cfg.n_grid), coef_medians)}
    )
    report.elapsed_seconds = time.perf_counter() - t0
    return report


def _build_region(cfg: ExperimentConfig, kind: str, fit, pred, alpha: float):
    if kind == "chebyshev":
        return region_chebyshev(fit, pred, alpha)
    if kind == "chi_square":
        return region_chisquare(fit, pred, alpha, purely_normal=cfg.purely_normal)
    if kind == "quadratic_bound":
        if cfg.k0 is None:
            raise InvalidInput("quadratic_bound regions need k0 in the experiment config")
        return region_quadratic(fit, pred, alpha, cfg.k0)
    raise InvalidInput(f"unknown region kind {kind!r}")


def run_coverage(cfg: ExperimentConfig) -> McReport:
    """Empirical coverage of the requested regions at each (n, alpha)."""
    t0 = time.perf_counter()
    fixed = _fixed_subject(cfg)
    report = McReport("coverage", provenance=_provenance(cfg, "coverage"))

    def one(task):
        n_idx, rep = task
        n = cfg.n_grid[n_idx]
        try:
            data = sample(cfg.spec, n, derive_seed(cfg.master_seed, 1, n_idx, rep), keep_hidden=False)
            fit = _fit(cfg, data)
            subject = _draw_subject(cfg, n_idx, rep, fixed)
            z0 = subject.z0 if subject.z0.size else None
            pred = predict_individual(fit, z0, subject.x0)
            hits = {}
            for kind in cfg.region_kinds:
                for alpha in cfg.alphas:
                    region = _build_region(cfg, kind, fit, pred, alpha)
                    hits[(kind, alpha)] = region_contains(region, subject.y0)
            return ("ok", hits)
        except EivError as exc:
            return ("fail", str(exc))

    tasks = [(i, r) for i in range(len(cfg.n_grid)) for r in range(cfg.replications)]
    results = _run_tasks(cfg, tasks, one)

    for i, n in enumerate(cfg.n_grid):
        chunk = results[i * cfg.replications : (i + 1) * cfg.replications]
        oks = [r[1] for r in chunk if r[0] == "ok"]
        for r in chunk:
            if r[0] == "fail":
                report.failures.append({"n": n, "message": r[1]})
        reps = len(oks)
        for kind in cfg.region_kinds:
            for alpha in cfg.alphas:
                if reps == 0:
                    continue
                p = float(np.mean([h[(kind, alpha)] for h in oks]))
                se = float(np.sqrt(p * (1.0 - p) / reps))
                report.rows.append(
                    {
                        "n": n,
                        "alpha": alpha,
                        "kind": kind,
                        "statistic": "coverage",
                        "value": p,
                        "se": se,
                    }
                )
        report.rows.append(
            {"n": n, "statistic": "failure_rate", "value": 1.0 - reps / cfg.replications}
        )
    report.elapsed_seconds = time.perf_counter() - t0
    return report


def run_abs_failure(cfg: ExperimentConfig) -> McReport:
    """Out-of-sample comparison of the folded-normal least-squares predictor
    against the naive plug-in predictor for the absolute-value family.

    Both predictors are scored against the true best predictor on fresh test
    subjects; the gap row carries the paired-difference standard error.
    """
    if not isinstance(cfg.spec, AbsSpec):
        raise InvalidInput("run_abs_failure needs an absolute-value family spec")
    t0 = time.perf_counter()
    true_params = transform(cfg.spec)
    report = McReport("abs_failure", provenance=_provenance(cfg, "abs_failure"))

    def one(task):
        n_idx, rep = task
        n = cfg.n_grid[n_idx]
        try:
            data = sample(cfg.spec, n, derive_seed(cfg.master_seed, 1, n_idx, rep), keep_hidden=False)
            fit = nls_fit(data, "absolute_value")
            naive_scale, naive_shift = naive_ols_abs(data)
            test = sample(
                cfg.spec, cfg.test_subjects, derive_seed(cfg.master_seed, 5, n_idx, rep),
                keep_hidden=False,
            )
            xs = test.x
            best = predict_rows(true_params, None, xs)[:, 0]
            ls_pred = predict_rows(fit.params, None, xs)[:, 0]
            naive_pred = naive_scale * np.abs(xs[:, 0] + naive_shift)
            ls_sq = (ls_pred - best) ** 2
            naive_sq = (naive_pred - best) ** 2
            diff = naive_sq - ls_sq
            return (
                "ok",
                float(np.mean(ls_sq)),
                float(np.mean(naive_sq)),
                float(np.mean(diff)),
                float(np.std(diff, ddof=1) / np.sqrt(diff.shape[0])),
            )
        except EivError as exc:
            return ("fail", str(exc))

    tasks = [(i, r) for i in range(len(cfg.n_grid)) for r in range(cfg.replications)]
    results = _run_tasks(cfg, tasks, one)

    ls_curve = []
    for i, n in enumerate(cfg.n_grid):
        chunk = results[i * cfg.replications : (i + 1) * cfg.replications]
        oks = [r for r in chunk if r[0] == "ok"]
        for r in chunk:
            if r[0] == "fail":
                report.failures.append({"n": n, "message": r[1]})
        if not oks:
            ls_curve.append(float("nan"))
            continue
        ls_mse = float(np.median([r[1] for r in oks]))
        naive_mse = float(np.median([r[2] for r in oks]))
        gap = float(np.median([r[3] for r in oks]))
        gap_se = float(np.median([r[4] for r in oks]))
        ls_curve.append(ls_mse)
        report.rows.append({"n": n, "statistic": "ls_predictor_mse", "value": ls_mse})
        report.rows.append({"n": n, "statistic": "naive_predictor_mse", "value": naive_mse})
        report.rows.append({"n": n, "statistic": "mse_gap", "value": gap, "se": gap_se})
    report.rows.append(
        {"statistic": "ls_mse_loglog_slope", "value": _slope(list(cfg.n_grid), ls_curve)}
    )
    report.elapsed_seconds = time.perf_counter() - t0
    return report
