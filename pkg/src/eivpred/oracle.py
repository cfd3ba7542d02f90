"""Brute-force conditional moments via numerical quadrature.

Ground truth for the parameter-transform and predictor modules: conditional
expectations and variances of the response given the observed surrogate are
computed from first principles by integrating the family's regression
function against the exact Gaussian conditional law of the latent covariate,
never through the closed-form transformed parameters.

Gauss-Hermite rules are generated at startup by the Golub-Welsch method from
the three-term recurrence (no tabulated constants).  The absolute-value
family is integrated adaptively with an explicit breakpoint at the kink,
where a fixed Hermite rule converges too slowly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
from scipy import integrate

from .errors import InvalidInput, SpecError, Unsupported
from .linalg import cholesky_psd, pinv
from .models import AbsSpec, Dataset, LinearSpec, ModelSpec, PolynomialSpec, sample, validate

__all__ = [
    "QuadratureRule",
    "hermite_rule",
    "conditional_expectation",
    "conditional_variance",
    "mc_conditional_check",
    "BinnedCheck",
]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Hermite nodes and weights for the weight function exp(-t^2)."""

    count: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def normalized_weights(self) -> np.ndarray:
        """Weights for expectations under N(0, 1/2); they sum to one."""
        return self.weights / np.sqrt(np.pi)

    def gaussian_points(self, mean: float, var: float) -> np.ndarray:
        """Nodes mapped so the rule integrates against N(mean, var)."""
        return mean + np.sqrt(2.0 * var) * self.nodes


@lru_cache(maxsize=None)
def hermite_rule(count: int) -> QuadratureRule:
    """Golub-Welsch construction from the Hermite recurrence coefficients."""
    if count < 1:
        raise InvalidInput("node count must be >= 1")
    off_diag = np.sqrt(np.arange(1, count) / 2.0)
    jacobi = np.diag(off_diag, 1) + np.diag(off_diag, -1)
    values, vectors = np.linalg.eigh(jacobi)
    weights = np.sqrt(np.pi) * vectors[0, :] ** 2
    return QuadratureRule(count=count, nodes=values, weights=weights)


# ---------------------------------------------------------------------------
# conditional law of the latent covariate
# ---------------------------------------------------------------------------


def _latent_given_x(spec: ModelSpec, x):
    """Mean and covariance of xi | x, plus E[eps | x], by Gaussian conditioning."""
    if isinstance(spec, LinearSpec):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        x_prec = pinv(spec.x_cov)
        gain = spec.latent_cov @ x_prec
        mean = spec.latent_mean + gain @ (x - spec.latent_mean)
        cov = spec.latent_cov - gain @ spec.latent_cov
        eps_mean = spec.errors.sigma_eps_delta @ x_prec @ (x - spec.latent_mean)
        return mean, cov, eps_mean
    x = float(np.squeeze(x))
    share = spec.latent_var / spec.x_var
    mean = spec.latent_mean + share * (x - spec.latent_mean)
    var = spec.latent_var - share * spec.latent_var
    cross = getattr(spec, "sigma_eps_delta", 0.0)
    eps_mean = cross / spec.x_var * (x - spec.latent_mean)
    return np.array([mean]), np.array([[var]]), np.array([eps_mean])


def _z_part(spec: ModelSpec, z0):
    """Contribution of the exact covariate: at z0 if given, else at E[z]."""
    if isinstance(spec, LinearSpec):
        if spec.z_dim == 0:
            return np.zeros(spec.response_dim)
        zval = np.asarray(z0, dtype=float) if z0 is not None else spec.z_dist.mean
        return spec.z_slopes.T @ zval
    if getattr(spec, "z_dim", 0) == 0:
        return np.zeros(1)
    zval = np.asarray(z0, dtype=float) if z0 is not None else spec.z_dist.mean
    return np.array([float(spec.z_slopes @ zval)])


def _latent_only(spec: ModelSpec):
    """Regression surface as a function of the latent covariate alone (z = 0)."""
    q = spec.z_dim if isinstance(spec, (LinearSpec, PolynomialSpec)) else 0

    def g(xi_rows: np.ndarray) -> np.ndarray:
        return spec.regression(np.zeros((xi_rows.shape[0], q)), xi_rows)

    return g


def _gh_expect(fun, mean: np.ndarray, cov: np.ndarray, nodes: int):
    """E[fun(v)] for v ~ N(mean, cov) by a product Gauss-Hermite rule.

    ``fun`` maps (npoints, dim) -> (npoints, dout).  Supports dim <= 3.
    """
    dim = mean.shape[0]
    if dim > 3:
        raise Unsupported("product quadrature supported only for dimension <= 3")
    rule = hermite_rule(nodes)
    factor = cholesky_psd(cov)
    grids = list(product(range(rule.count), repeat=dim))
    t = rule.nodes[np.array(grids)]  # (count^dim, dim)
    w = np.prod(rule.normalized_weights[np.array(grids)], axis=1)
    points = mean + np.sqrt(2.0) * t @ factor.T
    values = fun(points)
    return w @ values


def _kink_location(spec: AbsSpec) -> float:
    return -spec.shift


def _adaptive_expect(fun, mean: float, var: float, kink: float) -> float:
    """E[fun(v)] for scalar v ~ N(mean, var), splitting at a known kink."""
    if var <= 0:
        return float(fun(np.array([mean]))[0])
    sd = np.sqrt(var)
    lo, hi = mean - 10.0 * sd, mean + 10.0 * sd
    norm = 1.0 / np.sqrt(2.0 * np.pi * var)

    def integrand(v):
        return float(fun(np.array([v]))[0]) * norm * np.exp(-0.5 * (v - mean) ** 2 / var)

    pts = [kink] if lo < kink < hi else None
    value, _ = integrate.quad(integrand, lo, hi, points=pts, limit=200, epsabs=1e-13, epsrel=1e-13)
    return value


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def conditional_expectation(spec: ModelSpec, x, nodes: int = 64, z0=None):
    """Best predictor E[y | x] (or E[y | z0, x]) computed by quadrature.

    Returns a float for scalar-response families and a (d,) vector for the
    linear family.  ``nodes`` is the Gauss-Hermite node count per dimension.
    """
    if nodes < 8:
        raise InvalidInput("nodes must be >= 8")
    violations = validate(spec)
    if violations:
        raise SpecError(violations)
    mean, cov, eps_mean = _latent_given_x(spec, x)
    g = _latent_only(spec)

    if isinstance(spec, AbsSpec):
        value = _adaptive_expect(
            lambda v: g(v.reshape(-1, 1))[:, 0],
            float(mean[0]),
            float(cov[0, 0]),
            _kink_location(spec),
        )
        result = np.array([value])
    else:
        var_scale = float(np.max(np.abs(cov), initial=0.0))
        if var_scale == 0.0:
            result = g(mean[None, :])[0]
        else:
            result = _gh_expect(g, mean, cov, nodes)
    result = result + eps_mean + _z_part(spec, z0)
    return result if isinstance(spec, LinearSpec) else float(result[0])


def conditional_variance(spec: ModelSpec, x, nodes: int = 64) -> float:
    """Var(y | x) for scalar-response families, by quadrature.

    Includes the error in the equation and, for the polynomial family, the
    response measurement error conditioned on the surrogate.
    """
    if isinstance(spec, LinearSpec):
        raise Unsupported("conditional variance oracle covers scalar-response families only")
    violations = validate(spec)
    if violations:
        raise SpecError(violations)
    mean, cov, _ = _latent_given_x(spec, x)
    g = _latent_only(spec)

    if isinstance(spec, AbsSpec):
        m0, v0 = float(mean[0]), float(cov[0, 0])
        kink = _kink_location(spec)

        def fun(v):
            return g(v.reshape(-1, 1))[:, 0]

        e1 = _adaptive_expect(fun, m0, v0, kink)
        e2 = _adaptive_expect(lambda v: fun(v) ** 2, m0, v0, kink)
        return e2 - e1**2 + spec.sigma2_e

    if isinstance(spec, PolynomialSpec) and spec.sigma2_eps > 0:
        # joint conditional law of (xi, eps) given x for the covariance term
        s2x = spec.x_var
        top = np.array(
            [[spec.latent_var, 0.0], [0.0, spec.sigma2_eps]]
        )
        cross = np.array([[spec.latent_var], [spec.sigma_eps_delta]])
        vmat = top - cross @ cross.T / s2x
        xval = float(np.squeeze(x))
        gain = cross[:, 0] / s2x
        jmean = np.array([spec.latent_mean, 0.0]) + gain * (xval - spec.latent_mean)

        def h(points):
            return g(points[:, :1])[:, 0][:, None] + points[:, 1:2]

        e1 = _gh_expect(h, jmean, vmat, nodes)[0]
        e2 = _gh_expect(lambda p: h(p) ** 2, jmean, vmat, nodes)[0]
        return float(e2 - e1**2) + spec.sigma2_e

    fun = lambda p: g(p)[:, 0][:, None]  # noqa: E731
    e1 = _gh_expect(fun, mean, cov, nodes)[0]
    e2 = _gh_expect(lambda p: fun(p) ** 2, mean, cov, nodes)[0]
    sigma2_e = getattr(spec, "sigma2_e", 0.0)
    return float(e2 - e1**2) + sigma2_e


@dataclass(frozen=True, eq=False)
class BinnedCheck:
    """Binned simulation-vs-quadrature comparison of E[y | x]."""

    edges: np.ndarray
    counts: np.ndarray
    mc_mean: np.ndarray
    mc_se: np.ndarray
    quad_mean: np.ndarray
    empty: np.ndarray  # bins excluded from comparison


def mc_conditional_check(
    spec: ModelSpec, x_bin_edges, n: int, seed: int, *, nodes: int = 64
) -> BinnedCheck:
    """Simulation-based binned conditional means, cross-checking quadrature.

    The quadrature target per bin is the model-implied E[y | x in bin],
    obtained by integrating E[y | x] against the Gaussian marginal of x over
    the bin (Gauss-Legendre), so both sides estimate the same quantity.
    """
    if n < 10**5:
        raise InvalidInput("mc_conditional_check needs n >= 1e5")
    scalar_x = getattr(spec, "latent_dim", 0) == 1
    scalar_y = not isinstance(spec, LinearSpec) or spec.response_dim == 1
    if not (scalar_x and scalar_y):
        raise Unsupported("binned check requires a scalar surrogate and response")
    edges = np.asarray(x_bin_edges, dtype=float)
    if edges.ndim != 1 or edges.shape[0] < 2 or np.any(np.diff(edges) <= 0):
        raise InvalidInput("bin edges must be strictly increasing, length >= 2")

    data: Dataset = sample(spec, n, seed, keep_hidden=False)
    xs = data.x[:, 0]
    ys = data.y[:, 0]
    nbins = edges.shape[0] - 1
    idx = np.digitize(xs, edges) - 1
    counts = np.zeros(nbins, dtype=int)
    mc_mean = np.full(nbins, np.nan)
    mc_se = np.full(nbins, np.nan)
    for b in range(nbins):
        mask = idx == b
        counts[b] = int(np.sum(mask))
        if counts[b] >= 2:
            vals = ys[mask]
            mc_mean[b] = float(np.mean(vals))
            mc_se[b] = float(np.std(vals, ddof=1) / np.sqrt(counts[b]))

    if isinstance(spec, LinearSpec):
        mu = float(spec.latent_mean[0])
        s2x = float(spec.x_cov[0, 0])
    else:
        mu, s2x = spec.latent_mean, spec.x_var
    leg_nodes, leg_weights = np.polynomial.legendre.leggauss(64)
    quad_mean = np.full(nbins, np.nan)
    for b in range(nbins):
        lo, hi = edges[b], edges[b + 1]
        pts = 0.5 * (hi - lo) * leg_nodes + 0.5 * (hi + lo)
        dens = np.exp(-0.5 * (pts - mu) ** 2 / s2x) / np.sqrt(2 * np.pi * s2x)
        cond = np.array(
            [np.squeeze(conditional_expectation(spec, p, nodes=nodes)) for p in pts]
        )
        mass = 0.5 * (hi - lo) * np.sum(leg_weights * dens)
        if mass > 0:
            quad_mean[b] = 0.5 * (hi - lo) * np.sum(leg_weights * dens * cond) / mass
    return BinnedCheck(
        edges=edges,
        counts=counts,
        mc_mean=mc_mean,
        mc_se=mc_se,
        quad_mean=quad_mean,
        empty=counts < 2,
    )
