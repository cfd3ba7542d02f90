"""Point predictors and confidence regions around them.

Individual prediction plugs the fitted observable-regression coefficients
into the regression surface at the new covariates.  Mean prediction removes
the part of the response measurement error that is predictable from the
surrogate, which requires the error cross-covariance to be known.

Three region constructions are provided: a distribution-free ellipsoid from
the Markov/Chebyshev bound, a chi-square ellipsoid that is exact for purely
normal models, and a bound-based interval for the quadratic family driven by
a known lower bound on the reliability ratio.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaincc

from .errors import DimensionError, InvalidInput, SingularCovariance
from .estimators import FittedModel
from .linalg import min_eigenvalue, pinv, sym_sqrt
from .transform import QuadraticObservable, quadratic_bound_term

__all__ = [
    "Prediction",
    "ConfidenceRegion",
    "predict_individual",
    "predict_mean",
    "chi2_upper_quantile",
    "region_chebyshev",
    "region_chisquare",
    "region_quadratic",
    "region_contains",
]


@dataclass(frozen=True, eq=False)
class Prediction:
    """A point prediction at new covariates."""

    point: np.ndarray  # (d,)
    kind: str  # "individual" | "mean"
    z0: Optional[np.ndarray]
    x0: np.ndarray


@dataclass(frozen=True, eq=False)
class ConfidenceRegion:
    """Region around a point prediction.

    For the ellipsoidal kinds membership is
    ``|| shape @ (h - center) ||^2 <= threshold`` with ``shape`` the
    symmetric square root of the pseudo-inverted residual covariance; for
    the interval kind it is ``|h - center| <= threshold``.
    """

    kind: str  # "chebyshev" | "chi_square" | "quadratic_bound"
    center: np.ndarray  # (d,)
    threshold: float
    alpha: float
    shape: Optional[np.ndarray] = None  # (d, d) for ellipsoidal kinds
    notes: tuple[str, ...] = ()

    @property
    def half_width(self) -> float:
        """Interval half-width (interval kind only)."""
        if self.kind != "quadratic_bound":
            raise InvalidInput("half_width applies to the interval region")
        return self.threshold


def _check_point(fit: FittedModel, z0, x0) -> tuple[Optional[np.ndarray], np.ndarray]:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    params = fit.params
    if fit.family == "linear":
        m = params.x_slopes.shape[0]
        q = params.z_slopes.shape[0]
        if x0.shape != (m,):
            raise DimensionError(f"x0 must have shape ({m},)")
        if q:
            z0 = np.atleast_1d(np.asarray(z0, dtype=float))
            if z0.shape != (q,):
                raise DimensionError(f"z0 must have shape ({q},)")
        else:
            z0 = None
        return z0, x0
    if x0.shape != (1,):
        raise DimensionError("x0 must be scalar for this family")
    q = params.z_slopes.shape[0] if hasattr(params, "z_slopes") else 0
    if q:
        z0 = np.atleast_1d(np.asarray(z0, dtype=float))
        if z0.shape != (q,):
            raise DimensionError(f"z0 must have shape ({q},)")
    else:
        z0 = None
    return z0, x0


def predict_individual(fit: FittedModel, z0, x0) -> Prediction:
    """Plug-in evaluation of the fitted regression surface at (z0, x0)."""
    z0, x0 = _check_point(fit, z0, x0)
    point = np.atleast_1d(np.asarray(fit.params.predict(z0, x0), dtype=float))
    if not np.all(np.isfinite(point)):
        raise InvalidInput("prediction is not finite")
    return Prediction(point=point, kind="individual", z0=z0, x0=x0)


def predict_mean(fit: FittedModel, z0, x0, sigma_eps_delta) -> Prediction:
    """Prediction of the noiseless regression value.

    Subtracts the surrogate-predictable part of the response measurement
    error: ``center - sigma_eps_delta @ inv(x_cov) @ (x0 - x_mean)`` with the
    sample mean and 1/(n-1) covariance of the surrogate.  ``sigma_eps_delta``
    is the known error cross-covariance (d x m, or a scalar).
    """
    base = predict_individual(fit, z0, x0)
    m = fit.moments.x_mean.shape[0]
    d = base.point.shape[0]
    cross = np.asarray(sigma_eps_delta, dtype=float).reshape(d, m)
    x_cov = fit.moments.x_cov
    scale = max(float(np.max(np.abs(x_cov))), 1e-300)
    if min_eigenvalue(x_cov) <= 1e-12 * scale:
        raise SingularCovariance("sample covariance of x is singular")
    correction = cross @ np.linalg.solve(x_cov, base.x0 - fit.moments.x_mean)
    return Prediction(point=base.point - correction, kind="mean", z0=base.z0, x0=base.x0)


def chi2_upper_quantile(dim: int, alpha: float, tol: float = 1e-12) -> float:
    """Upper alpha-quantile of the chi-square law with ``dim`` degrees of
    freedom, by bisection on the regularized upper incomplete gamma."""
    if not 0 < alpha < 1:
        raise InvalidInput("alpha must lie in (0, 1)")
    if dim < 1:
        raise InvalidInput("dimension must be >= 1")
    hi = 1.0
    while gammaincc(dim / 2.0, hi / 2.0) > alpha:
        hi *= 2.0
        if hi > 1e12:
            break
    lo = 0.0
    while hi - lo > tol * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if gammaincc(dim / 2.0, mid / 2.0) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _resid_shape(fit: FittedModel) -> tuple[np.ndarray, tuple[str, ...]]:
    resid_cov = fit.residual_moment
    notes: tuple[str, ...] = ()
    scale = max(float(np.max(np.abs(resid_cov))), 0.0)
    if scale == 0.0 or min_eigenvalue(resid_cov) <= 1e-12 * scale:
        notes = ("residual covariance near-singular; region lives on a subspace",)
    return sym_sqrt(pinv(resid_cov)), notes


def region_chebyshev(fit: FittedModel, pred: Prediction, alpha: float) -> ConfidenceRegion:
    """Distribution-free region with threshold d / alpha.

    Guarantees asymptotic coverage at least 1 - alpha whenever the residual
    covariance is positive definite; conservative in practice.
    """
    if not 0 < alpha < 1:
        raise InvalidInput("alpha must lie in (0, 1)")
    shape, notes = _resid_shape(fit)
    d = pred.point.shape[0]
    return ConfidenceRegion(
        kind="chebyshev",
        center=pred.point,
        threshold=d / alpha,
        alpha=alpha,
        shape=shape,
        notes=notes,
    )


def region_chisquare(
    fit: FittedModel, pred: Prediction, alpha: float, purely_normal: bool = False
) -> ConfidenceRegion:
    """Region with the chi-square upper alpha-quantile as threshold.

    Asymptotically exact when the model is purely normal (Gaussian z and no
    error in the equation); the caller asserts that via ``purely_normal`` and
    a note is recorded otherwise.
    """
    if not 0 < alpha < 1:
        raise InvalidInput("alpha must lie in (0, 1)")
    shape, notes = _resid_shape(fit)
    if not purely_normal:
        notes = notes + ("purely-normal assumption not asserted",)
    d = pred.point.shape[0]
    return ConfidenceRegion(
        kind="chi_square",
        center=pred.point,
        threshold=chi2_upper_quantile(d, alpha),
        alpha=alpha,
        shape=shape,
        notes=notes,
    )


def region_quadratic(fit: FittedModel, pred: Prediction, alpha: float, k0: float) -> ConfidenceRegion:
    """Bound-based interval for the quadratic family.

    Half-width ``alpha^(-1/2) * sqrt(max(m_u2 + 4 (1/k0 - 1) x_var * G, 0))``
    evaluated from the fitted quantities; ``k0`` is the known lower bound on
    the reliability ratio.  A nonpositive bracket collapses the interval to
    zero width with a note instead of raising.
    """
    if not 0 < alpha < 1:
        raise InvalidInput("alpha must lie in (0, 1)")
    if not 0 < k0 <= 0.5:
        raise InvalidInput("reliability lower bound must lie in (0, 1/2]")
    params = fit.params
    if not isinstance(params, QuadraticObservable):
        raise InvalidInput("bound-based interval applies to the quadratic family")
    m_u2 = float(fit.residual_moment[0, 0])
    x_mean = float(fit.moments.x_mean[0])
    x_var = fit.moments.x_var
    bound = quadratic_bound_term(
        float(pred.x0[0]), x_mean, x_var, params.slope, params.curvature, k0
    )
    bracket = m_u2 + 4.0 * (1.0 / k0 - 1.0) * x_var * bound
    notes: tuple[str, ...] = ()
    if bracket <= 0.0:
        notes = ("variance bracket nonpositive; interval degenerates to its center",)
        bracket = 0.0
    half_width = np.sqrt(bracket) / np.sqrt(alpha)
    return ConfidenceRegion(
        kind="quadratic_bound",
        center=pred.point,
        threshold=float(half_width),
        alpha=alpha,
        shape=None,
        notes=notes,
    )


def region_contains(region: ConfidenceRegion, h) -> bool:
    """Whether ``h`` satisfies the region's defining inequality."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if h.shape != region.center.shape:
        raise DimensionError("point dimension does not match region")
    dev = h - region.center
    if region.kind == "quadratic_bound":
        return bool(abs(dev[0]) <= region.threshold)
    stat = float(np.sum((region.shape @ dev) ** 2))
    return bool(stat <= region.threshold)
