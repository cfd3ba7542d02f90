"""Sample statistics and least-squares fitting against observable data.

Ordinary least squares targets the observable regression of the response on
``(z, x)`` (or powers of x), which is exactly what the best predictor needs;
no attempt is made to recover the latent-regression parameters.  Singular
regressor covariances fall back to the minimum-norm pseudo-inverse solution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize

from .errors import DimensionError, InsufficientData, InvalidInput, NonConvergence
from .linalg import pinv
from .models import Dataset
from .transform import (
    AbsObservable,
    ExponentialObservable,
    LinearObservable,
    PolynomialObservable,
    QuadraticObservable,
    TransformedParams,
    TrigObservable,
    abs_F,
    predict_rows,
)

__all__ = [
    "SampleMoments",
    "FittedModel",
    "sample_moments",
    "ols_fit",
    "residual_covariance",
    "nls_fit",
    "naive_ols_abs",
]

MAX_POLY_DEGREE = 6
CONDITION_WARN = 1e12


@dataclass(frozen=True, eq=False)
class SampleMoments:
    """Bar-means and sample covariance matrices of response and regressors.

    ``s_rr`` and ``s_ry`` use the 1/n normalization; ``x_cov`` is the
    unbiased 1/(n-1) covariance of the surrogate.
    """

    y_mean: np.ndarray  # (d,)
    r_mean: np.ndarray  # (p,)
    s_rr: np.ndarray  # (p, p)
    s_ry: np.ndarray  # (p, d)
    x_mean: np.ndarray  # (m,)
    x_cov: np.ndarray  # (m, m)
    n: int

    @property
    def x_var(self) -> float:
        return float(self.x_cov[0, 0])


@dataclass(frozen=True, eq=False)
class FittedModel:
    """Estimated observable-regression coefficients plus residual moments."""

    family: str
    params: TransformedParams
    residual_moment: np.ndarray  # (d, d); 1/n outer-product sum of residuals
    moments: SampleMoments
    n: int
    objective: Optional[float] = None
    converged: Optional[bool] = None
    condition_number: Optional[float] = None
    notes: tuple[str, ...] = ()

    @property
    def response_dim(self) -> int:
        return self.residual_moment.shape[0]

    def predict(self, z0, x0):
        return self.params.predict(z0, x0)


def _regressors(data: Dataset, family: str, degree: Optional[int]) -> tuple[np.ndarray, int]:
    """Regressor rows per family; returns (r, degree_used)."""
    z, x = data.z, data.x
    if family == "linear":
        return np.hstack([z, x]), 0
    if x.shape[1] != 1:
        raise DimensionError("polynomial-type families need a scalar surrogate")
    if family == "quadratic":
        degree = 2
        z = np.zeros((x.shape[0], 0))
    elif family == "polynomial":
        if degree is None:
            raise InvalidInput("polynomial fitting needs an explicit degree")
    else:
        raise InvalidInput(f"no least-squares regressors for family {family!r}")
    if degree > MAX_POLY_DEGREE:
        raise InvalidInput(
            f"degree {degree} above cap {MAX_POLY_DEGREE}; raw powers become too ill-conditioned"
        )
    powers = x[:, 0][:, None] ** np.arange(1, degree + 1)
    return np.hstack([z, powers]), degree


def sample_moments(data: Dataset, family: str = "linear", degree: Optional[int] = None) -> SampleMoments:
    """All bar-means and S-matrices for the family's regressor vector."""
    n = data.n
    if n < 2:
        raise InsufficientData("need at least two observations")
    r, _ = _regressors(data, family, degree)
    y = data.y
    y_mean = y.mean(axis=0)
    r_mean = r.mean(axis=0)
    rc = r - r_mean
    yc = y - y_mean
    s_rr = rc.T @ rc / n
    s_ry = rc.T @ yc / n
    x_mean = data.x.mean(axis=0)
    xc = data.x - x_mean
    x_cov = xc.T @ xc / (n - 1)
    return SampleMoments(
        y_mean=y_mean, r_mean=r_mean, s_rr=s_rr, s_ry=s_ry, x_mean=x_mean, x_cov=x_cov, n=n
    )


def _coef_params(family: str, q: int, intercept: np.ndarray, coefs: np.ndarray):
    if family == "linear":
        return LinearObservable(
            intercept=intercept, z_slopes=coefs[:q], x_slopes=coefs[q:], residual_cov=None
        )
    if family == "polynomial":
        return PolynomialObservable(
            intercept=float(intercept[0]), coefs=coefs[q:, 0].copy(), z_slopes=coefs[:q, 0].copy()
        )
    return QuadraticObservable(
        intercept=float(intercept[0]), slope=float(coefs[0, 0]), curvature=float(coefs[1, 0])
    )


def ols_fit(data: Dataset, family: str = "linear", degree: Optional[int] = None) -> FittedModel:
    """Ordinary least squares on the observable regressors.

    Coefficients solve ``coefs = pinv(S_rr) @ S_ry`` with the intercept from
    the bar-mean relation, which minimizes the summed squared residuals; a
    singular S_rr yields the minimum-norm coefficients without failure.
    """
    r, _ = _regressors(data, family, degree)
    p = r.shape[1]
    if data.n < p + 1:
        raise InsufficientData(f"need n >= {p + 1} for {p} regressors")
    moments = sample_moments(data, family, degree)
    coefs = pinv(moments.s_rr) @ moments.s_ry  # (p, d)
    intercept = moments.y_mean - moments.r_mean @ coefs
    resid = data.y - intercept - r @ coefs
    resid_moment = resid.T @ resid / data.n

    eigvals = np.abs(np.linalg.eigvalsh(moments.s_rr))
    cond = float(eigvals.max() / eigvals.min()) if eigvals.min() > 0 else float("inf")
    notes = ()
    if cond > CONDITION_WARN:
        warnings.warn(f"regressor covariance condition number {cond:.2e}", stacklevel=2)
        notes = (f"ill-conditioned regressors (cond {cond:.2e})",)

    q = data.z.shape[1] if family != "quadratic" else 0
    params = _coef_params(family, q, intercept, coefs)
    return FittedModel(
        family=family,
        params=params,
        residual_moment=resid_moment,
        moments=moments,
        n=data.n,
        objective=float(np.sum(resid**2)),
        condition_number=cond,
        notes=notes,
    )


def residual_covariance(data: Dataset, fit: FittedModel):
    """1/n outer-product sum of the fit's residuals on ``data``.

    Returns a matrix for the linear family and the scalar mean squared
    residual for scalar-response families.
    """
    resid = data.y - predict_rows(fit.params, data.z, data.x)
    out = resid.T @ resid / data.n
    return out if fit.family == "linear" else float(out[0, 0])


# ---------------------------------------------------------------------------
# nonlinear least squares
# ---------------------------------------------------------------------------

_REL_TOL = 1e-12
_MAX_ITER = 500


def _exp_model(x, scale, rate):
    return scale * np.exp(np.clip(rate * x, -700.0, 700.0))


def _exp_starts(x: np.ndarray, y: np.ndarray) -> list[np.ndarray]:
    """Moment-based starts plus sign flips for the exponential family."""
    sd = float(np.std(x)) or 1.0
    rates = []
    positive = y > 0
    if positive.sum() >= 3:
        slope = np.polyfit(x[positive], np.log(y[positive]), 1)[0]
        if np.isfinite(slope) and abs(slope) > 1e-12:
            rates += [slope, -slope, 2 * slope]
    rates += [1.0 / sd, -1.0 / sd, 0.5 / sd, -0.5 / sd, 0.0]
    starts = []
    for rate in rates[:8]:
        weights = _exp_model(x, 1.0, rate)
        denom = float(weights @ weights)
        scale = float(y @ weights) / denom if denom > 0 else float(np.mean(y))
        starts.append(np.array([scale, rate]))
    return starts


def _fit_exponential(x, y, starts):
    def residual(p):
        return y - _exp_model(x, p[0], p[1])

    def jac(p):
        ex = _exp_model(x, 1.0, p[1])
        return np.column_stack([-ex, -p[0] * x * ex])

    best = None
    for p0 in starts:
        try:
            res = optimize.least_squares(
                residual, p0, jac=jac, method="lm", ftol=_REL_TOL, xtol=_REL_TOL,
                max_nfev=_MAX_ITER * 3,
            )
        except Exception:
            continue
        if best is None or res.cost < best.cost:
            best = res
    if best is None or not np.all(np.isfinite(best.x)):
        raise NonConvergence("all exponential starts failed")
    params = ExponentialObservable(scale=float(best.x[0]), rate=float(best.x[1]))
    return params, 2.0 * float(best.cost), bool(best.status > 0)


def _trig_design(x, freq, harmonics):
    k = np.arange(1, harmonics + 1)
    phase = freq * x[:, None] * k
    return np.hstack([np.ones((x.shape[0], 1)), np.cos(phase), np.sin(phase)])


def _fit_trig(x, y, harmonics, freq_grid):
    """Profile the amplitudes (linear given the frequency), then polish."""
    h = harmonics

    def unpack(p):
        return p[0], p[1 : 1 + h], p[1 + h : 1 + 2 * h], p[1 + 2 * h]

    def residual(p):
        const, ca, sa, freq = unpack(p)
        design = _trig_design(x, freq, h)
        return y - design @ np.concatenate([[const], ca, sa])

    best = None
    for freq in freq_grid:
        design = _trig_design(x, freq, h)
        amps, *_ = np.linalg.lstsq(design, y, rcond=None)
        p0 = np.concatenate([amps, [freq]])
        try:
            res = optimize.least_squares(
                residual, p0, method="lm", ftol=_REL_TOL, xtol=_REL_TOL, max_nfev=_MAX_ITER * (2 * h + 2)
            )
        except Exception:
            continue
        if best is None or res.cost < best.cost:
            best = res
    if best is None:
        raise NonConvergence("all trigonometric starts failed")
    const, ca, sa, freq = unpack(best.x)
    if freq < 0:  # canonical orientation: cos is even, sin flips with frequency
        freq, sa = -freq, -sa
    params = TrigObservable(const=float(const), cos_amps=ca.copy(), sin_amps=sa.copy(), freq=float(freq))
    return params, 2.0 * float(best.cost), bool(best.status > 0)


def _abs_profile_objective(x, y):
    """Objective over (gain, offset) with the scale profiled out exactly."""
    sum_y2 = float(y @ y)

    def objective(p):
        shape = abs_F(p[0] * x + p[1])
        denom = float(shape @ shape)
        if denom <= 0 or not np.isfinite(denom):
            return sum_y2
        num = float(y @ shape)
        return sum_y2 - num * num / denom

    return objective


def _fit_abs(x, y, starts):
    objective = _abs_profile_objective(x, y)
    scale = max(float(y @ y), 1.0)  # relative objective-decrease convergence
    best = None
    for p0 in starts:
        res = optimize.minimize(
            objective,
            p0,
            method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": _REL_TOL * scale, "maxiter": _MAX_ITER},
        )
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not np.all(np.isfinite(best.x)):
        raise NonConvergence("all absolute-value starts failed")
    gain, offset = best.x
    shape = abs_F(gain * x + offset)
    scale = float(y @ shape) / float(shape @ shape)
    if gain < 0:  # F is even: (gain, offset, scale) ~ (-gain, -offset, scale)
        gain, offset = -gain, -offset
    params = AbsObservable(scale=scale, gain=float(gain), offset=float(offset))
    return params, float(best.fun), bool(best.success)


def nls_fit(
    data: Dataset,
    family: str,
    init_strategy="auto",
    harmonics: int = 1,
) -> FittedModel:
    """Least squares over the transformed-parameter space of a nonlinear family.

    Runs a deterministic multi-start protocol (moment-based starts plus sign
    flips, or the starts supplied through ``init_strategy``) and keeps the
    best local minimizer.  Exponential and trigonometric fits use damped
    Gauss-Newton with analytic structure; the absolute-value family uses
    derivative-free simplex descent on the profiled objective.
    """
    if data.x.shape[1] != 1 or data.y.shape[1] != 1:
        raise DimensionError("nonlinear families are scalar in x and y")
    x, y = data.x[:, 0], data.y[:, 0]
    n = data.n
    n_params = {"exponential": 2, "trigonometric": 2 * harmonics + 2, "absolute_value": 3}
    if family not in n_params:
        raise InvalidInput(f"nls_fit does not handle family {family!r}")
    if n < n_params[family] + 1:
        raise InsufficientData("too few observations for the parameter count")

    if family == "exponential":
        starts = _exp_starts(x, y) if init_strategy == "auto" else [np.asarray(s, float) for s in init_strategy]
        params, objective, ok = _fit_exponential(x, y, starts)
    elif family == "trigonometric":
        if init_strategy == "auto":
            base = math.pi / (2.0 * (float(np.std(x)) or 1.0))
            freq_grid = base * np.array([0.25, 0.4, 0.6, 0.8, 1.0, 1.4, 2.0, 3.0])
        else:
            freq_grid = np.asarray(init_strategy, dtype=float)
        params, objective, ok = _fit_trig(x, y, harmonics, freq_grid)
    else:
        if init_strategy == "auto":
            sd = float(np.std(x)) or 1.0
            center = -float(np.mean(x))
            starts = [
                np.array([g / sd, b])
                for g in (1.0, -1.0, 2.0, -2.0)
                for b in (center / sd, 0.0)
            ]
        else:
            starts = [np.asarray(s, float) for s in init_strategy]
        params, objective, ok = _fit_abs(x, y, starts)

    moments = _plain_moments(data)
    resid = y - predict_rows(params, None, data.x)[:, 0]
    resid_moment = np.array([[float(resid @ resid) / n]])
    return FittedModel(
        family=family,
        params=params,
        residual_moment=resid_moment,
        moments=moments,
        n=n,
        objective=float(objective),
        converged=ok,
    )


def _plain_moments(data: Dataset) -> SampleMoments:
    """Moments with the raw surrogate as the only regressor."""
    n = data.n
    y_mean = data.y.mean(axis=0)
    x_mean = data.x.mean(axis=0)
    xc = data.x - x_mean
    yc = data.y - y_mean
    return SampleMoments(
        y_mean=y_mean,
        r_mean=x_mean.copy(),
        s_rr=xc.T @ xc / n,
        s_ry=xc.T @ yc / n,
        x_mean=x_mean,
        x_cov=xc.T @ xc / (n - 1),
        n=n,
    )


def naive_ols_abs(data: Dataset) -> tuple[float, float]:
    """Least squares for ``y ~ scale * |x + shift|`` (the plug-in predictor
    that ignores the measurement error; kept to demonstrate its failure).

    The scale is profiled out exactly, leaving a one-dimensional piecewise
    smooth problem over the shift, solved by deterministic multi-start
    bounded minimization.  Returns ``(scale, shift)``.
    """
    if data.x.shape[1] != 1 or data.y.shape[1] != 1:
        raise DimensionError("absolute-value family is scalar in x and y")
    x, y = data.x[:, 0], data.y[:, 0]
    sum_y2 = float(y @ y)

    def objective(shift):
        shape = np.abs(x + shift)
        denom = float(shape @ shape)
        if denom <= 0:
            return sum_y2
        num = float(y @ shape)
        return sum_y2 - num * num / denom

    lo = -float(np.max(x)) - 3.0 * float(np.std(x))
    hi = -float(np.min(x)) + 3.0 * float(np.std(x))
    edges = np.linspace(lo, hi, 9)  # 8 deterministic segments
    best_val, best_shift = np.inf, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        res = optimize.minimize_scalar(
            objective, bounds=(a, b), method="bounded", options={"xatol": 1e-10}
        )
        if res.fun < best_val:
            best_val, best_shift = float(res.fun), float(res.x)
    shape = np.abs(x + best_shift)
    scale = float(y @ shape) / float(shape @ shape)
    return scale, best_shift
