"""Model-family specifications and i.i.d. samplers.

Six structural errors-in-variables families are supported.  In every family
the covariate is observed through an additive-error surrogate ``x = xi +
delta`` and the response carries an error term; the latent covariate and the
measurement errors are jointly Gaussian while the exactly observed covariate
``z`` (when present) may be non-Gaussian.

Families
--------
linear          y = b + C'z + B'xi + e + eps      (vector y, z, xi)
polynomial      y = c'z + b0 + sum_j b_j xi^j + e + eps
quadratic       y = b0 + b1 xi + b2 xi^2 + e       (no z, no eps)
exponential     y = scale * exp(rate * xi) + e
trigonometric   y = const + sum_k (a_k cos(k w xi) + b_k sin(k w xi)) + e
absolute_value  y = scale * |xi + shift| + e
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import ClassVar, Optional, Union

import numpy as np

from .errors import SpecError
from .linalg import cholesky_psd, min_eigenvalue
from .rng import make_rng

__all__ = [
    "ZDistribution",
    "ErrorStructure",
    "LinearSpec",
    "PolynomialSpec",
    "QuadraticSpec",
    "ExponentialSpec",
    "TrigSpec",
    "AbsSpec",
    "ModelSpec",
    "HiddenTruth",
    "Dataset",
    "NewSubject",
    "validate",
    "sample",
    "new_subject",
    "spec_to_dict",
    "spec_from_dict",
    "save_dataset",
    "load_dataset",
]

_PSD_TOL = 1e-10


def _arr(x, ndim: int) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != ndim:
        a = a.reshape((-1,) * ndim) if a.size else a.reshape((0,) * ndim)
    return a


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ZDistribution:
    """Law of the exactly observed covariate ``z``.

    ``kind`` is one of ``gaussian``, ``uniform`` (componentwise) or
    ``two_point`` (symmetric two-point mixture per component).  ``mean`` and
    ``cov`` fix the first two moments; the non-Gaussian kinds require a
    diagonal covariance.
    """

    kind: str
    mean: np.ndarray
    cov: np.ndarray

    KINDS: ClassVar[tuple[str, ...]] = ("gaussian", "uniform", "two_point")

    def __post_init__(self):
        object.__setattr__(self, "mean", _arr(self.mean, 1))
        object.__setattr__(self, "cov", _arr(self.cov, 2))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def violations(self) -> list[str]:
        out = []
        if self.kind not in self.KINDS:
            out.append(f"unknown z distribution kind {self.kind!r}")
            return out
        q = self.dim
        if self.cov.shape != (q, q):
            out.append("z covariance shape does not match z mean")
            return out
        if np.max(np.abs(self.cov - self.cov.T), initial=0.0) > 0:
            out.append("z covariance not symmetric")
        if q >= 1 and min_eigenvalue(self.cov) <= 0:
            out.append("z covariance singular (assumption: Cov(z) nonsingular)")
        if self.kind != "gaussian" and q >= 1:
            off = self.cov - np.diag(np.diag(self.cov))
            if np.max(np.abs(off)) > 0:
                out.append(f"{self.kind} z distribution requires diagonal covariance")
        return out

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        q = self.dim
        if q == 0:
            return np.zeros((n, 0))
        if self.kind == "gaussian":
            g = rng.standard_normal((n, q))
            return self.mean + g @ cholesky_psd(self.cov).T
        var = np.diag(self.cov)
        if self.kind == "uniform":
            half = np.sqrt(3.0 * var)
            return self.mean + rng.uniform(-1.0, 1.0, size=(n, q)) * half
        if self.kind == "two_point":
            signs = 2.0 * rng.integers(0, 2, size=(n, q)) - 1.0
            return self.mean + signs * np.sqrt(var)
        raise SpecError([f"unknown z distribution kind {self.kind!r}"])


@dataclass(frozen=True, eq=False)
class ErrorStructure:
    """Second moments of the error terms of the linear family.

    ``sigma_e`` is the covariance of the error in the regression equation,
    ``sigma_eps`` of the response measurement error, ``sigma_delta`` of the
    covariate measurement error, and ``sigma_eps_delta`` the cross-covariance
    ``E[eps delta']`` (shape d x m).  The stacked covariance of
    ``(eps', delta')'`` must be positive semidefinite.
    """

    sigma_e: np.ndarray
    sigma_eps: np.ndarray
    sigma_delta: np.ndarray
    sigma_eps_delta: np.ndarray

    def __post_init__(self):
        for name in ("sigma_e", "sigma_eps", "sigma_delta", "sigma_eps_delta"):
            object.__setattr__(self, name, _arr(getattr(self, name), 2))

    @classmethod
    def scalar(
        cls,
        sigma2_e: float = 0.0,
        sigma2_eps: float = 0.0,
        sigma2_delta: float = 0.0,
        sigma_eps_delta: float = 0.0,
    ) -> "ErrorStructure":
        return cls(
            sigma_e=[[sigma2_e]],
            sigma_eps=[[sigma2_eps]],
            sigma_delta=[[sigma2_delta]],
            sigma_eps_delta=[[sigma_eps_delta]],
        )

    def stacked_measurement_cov(self) -> np.ndarray:
        """Covariance of the stacked measurement-error vector (eps', delta')'."""
        return np.block(
            [[self.sigma_eps, self.sigma_eps_delta], [self.sigma_eps_delta.T, self.sigma_delta]]
        )

    def violations(self, d: int, m: int) -> list[str]:
        out = []
        if self.sigma_e.shape != (d, d):
            out.append("sigma_e shape mismatch")
        if self.sigma_eps.shape != (d, d):
            out.append("sigma_eps shape mismatch")
        if self.sigma_delta.shape != (m, m):
            out.append("sigma_delta shape mismatch")
        if self.sigma_eps_delta.shape != (d, m):
            out.append("sigma_eps_delta shape mismatch")
        if out:
            return out
        if min_eigenvalue(self.sigma_e) < -_PSD_TOL:
            out.append("sigma_e not PSD")
        stacked = self.stacked_measurement_cov()
        scale = max(np.max(np.abs(stacked), initial=0.0), 1.0)
        if min_eigenvalue(stacked) < -_PSD_TOL * scale:
            out.append("error covariance not PSD (stacked (eps, delta) covariance)")
        return out


# ---------------------------------------------------------------------------
# family specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearSpec:
    """Multivariate linear family with intercept."""

    intercept: np.ndarray  # (d,)
    z_slopes: np.ndarray  # (q, d)
    latent_slopes: np.ndarray  # (m, d)
    latent_mean: np.ndarray  # (m,)
    latent_cov: np.ndarray  # (m, m)
    errors: ErrorStructure
    z_dist: Optional[ZDistribution] = None

    family: ClassVar[str] = "linear"

    def __post_init__(self):
        object.__setattr__(self, "intercept", _arr(self.intercept, 1))
        object.__setattr__(self, "z_slopes", _arr(self.z_slopes, 2))
        object.__setattr__(self, "latent_slopes", _arr(self.latent_slopes, 2))
        object.__setattr__(self, "latent_mean", _arr(self.latent_mean, 1))
        object.__setattr__(self, "latent_cov", _arr(self.latent_cov, 2))

    @property
    def response_dim(self) -> int:
        return self.intercept.shape[0]

    @property
    def z_dim(self) -> int:
        return self.z_slopes.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.latent_mean.shape[0]

    @property
    def x_cov(self) -> np.ndarray:
        return self.latent_cov + self.errors.sigma_delta

    def regression(self, z: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """Regression surface evaluated at exact covariates, (n, d)."""
        out = self.intercept + xi @ self.latent_slopes
        if self.z_dim:
            out = out + z @ self.z_slopes
        return out


class _ScalarLatentSpec:
    """Shared accessors for families with a scalar latent covariate."""

    latent_mean: float
    latent_var: float
    sigma2_delta: float

    @property
    def latent_dim(self) -> int:
        return 1

    @property
    def response_dim(self) -> int:
        return 1

    @property
    def z_dim(self) -> int:
        return 0

    @property
    def x_var(self) -> float:
        return self.latent_var + self.sigma2_delta

    @property
    def reliability(self) -> float:
        """Share of surrogate variance carried by the true covariate."""
        return self.latent_var / self.x_var


@dataclass(frozen=True, eq=False)
class PolynomialSpec(_ScalarLatentSpec):
    """Polynomial family of fixed, known degree >= 2 (scalar response)."""

    intercept: float
    coefs: np.ndarray  # (k,), coefficients of latent powers 1..k
    latent_mean: float
    latent_var: float
    sigma2_e: float = 0.0
    sigma2_eps: float = 0.0
    sigma2_delta: float = 0.0
    sigma_eps_delta: float = 0.0
    z_slopes: np.ndarray = field(default_factory=lambda: np.zeros(0))  # (q,)
    z_dist: Optional[ZDistribution] = None

    family: ClassVar[str] = "polynomial"

    def __post_init__(self):
        object.__setattr__(self, "coefs", _arr(self.coefs, 1))
        object.__setattr__(self, "z_slopes", _arr(self.z_slopes, 1))

    @property
    def degree(self) -> int:
        return self.coefs.shape[0]

    @property
    def z_dim(self) -> int:
        return self.z_slopes.shape[0]

    def error_structure(self) -> ErrorStructure:
        return ErrorStructure.scalar(
            self.sigma2_e, self.sigma2_eps, self.sigma2_delta, self.sigma_eps_delta
        )

    def regression(self, z: np.ndarray, xi: np.ndarray) -> np.ndarray:
        powers = xi[:, 0][:, None] ** np.arange(1, self.degree + 1)
        out = self.intercept + powers @ self.coefs
        if self.z_dim:
            out = out + z @ self.z_slopes
        return out[:, None]


@dataclass(frozen=True, eq=False)
class QuadraticSpec(_ScalarLatentSpec):
    """Quadratic family: no exact covariate and no response measurement error.

    ``reliability_floor`` is the known lower bound for the reliability ratio
    required by the bound-based confidence interval; it must lie in (0, 1/2].
    """

    intercept: float
    slope: float
    curvature: float
    latent_mean: float
    latent_var: float
    sigma2_e: float = 0.0
    sigma2_delta: float = 0.0
    reliability_floor: Optional[float] = None

    family: ClassVar[str] = "quadratic"

    def regression(self, z: np.ndarray, xi: np.ndarray) -> np.ndarray:
        v = xi[:, 0]
        return (self.intercept + self.slope * v + self.curvature * v**2)[:, None]


@dataclass(frozen=True, eq=False)
class ExponentialSpec(_ScalarLatentSpec):
    """Exponential regression family."""

    scale: float
    rate: float
    latent_mean: float
    latent_var: float
    sigma2_e: float = 0.0
    sigma2_delta: float = 0.0

    family: ClassVar[str] = "exponential"

    def regression(self, z: np.ndarray, xi: np.ndarray) -> np.ndarray:
        return (self.scale * np.exp(self.rate * xi[:, 0]))[:, None]


@dataclass(frozen=True, eq=False)
class TrigSpec(_ScalarLatentSpec):
    """Trigonometric-polynomial regression family."""

    const: float
    cos_amps: np.ndarray  # (h,)
    sin_amps: np.ndarray  # (h,)
    freq: float
    latent_mean: float
    latent_var: float
    sigma2_e: float = 0.0
    sigma2_delta: float = 0.0

    family: ClassVar[str] = "trigonometric"

    def __post_init__(self):
        object.__setattr__(self, "cos_amps", _arr(self.cos_amps, 1))
        object.__setattr__(self, "sin_amps", _arr(self.sin_amps, 1))

    @property
    def harmonics(self) -> int:
        return self.cos_amps.shape[0]

    def regression(self, z: np.ndarray, xi: np.ndarray) -> np.ndarray:
        k = np.arange(1, self.harmonics + 1)
        phase = self.freq * xi[:, 0][:, None] * k
        out = self.const + np.cos(phase) @ self.cos_amps + np.sin(phase) @ self.sin_amps
        return out[:, None]


@dataclass(frozen=True, eq=False)
class AbsSpec(_ScalarLatentSpec):
    """Absolute-value regression family (the case where the plug-in
    least-squares predictor on the latent shape fails)."""

    scale: float
    shift: float
    latent_mean: float
    latent_var: float
    sigma2_e: float = 0.0
    sigma2_delta: float = 0.0

    family: ClassVar[str] = "absolute_value"

    def regression(self, z: np.ndarray, xi: np.ndarray) -> np.ndarray:
        return (self.scale * np.abs(xi[:, 0] + self.shift))[:, None]


ModelSpec = Union[LinearSpec, PolynomialSpec, QuadraticSpec, ExponentialSpec, TrigSpec, AbsSpec]

_SCALAR_FAMILIES = (PolynomialSpec, QuadraticSpec, ExponentialSpec, TrigSpec, AbsSpec)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def _checks(spec: ModelSpec) -> list[tuple[str, bool]]:
    """(violation, blocks_sampling) pairs.

    Violations that make the joint law itself ill-defined block sampling;
    nonsingularity-style assumptions only matter for estimation and the
    parameter transforms, so degenerate laws can still be drawn from.
    """
    out: list[tuple[str, bool]] = []
    if isinstance(spec, LinearSpec):
        d, q, m = spec.response_dim, spec.z_dim, spec.latent_dim
        if spec.z_slopes.shape != (q, d):
            out.append(("z_slopes shape mismatch", True))
        if spec.latent_slopes.shape != (m, d):
            out.append(("latent_slopes shape mismatch", True))
        if spec.latent_cov.shape != (m, m):
            out.append(("latent_cov shape mismatch", True))
        if out:
            return out
        if min_eigenvalue(spec.latent_cov) < -_PSD_TOL:
            out.append(("latent covariance not PSD", True))
        if min_eigenvalue(spec.x_cov) <= 0:
            out.append(("surrogate covariance Cov(x) singular (assumption: nonsingular)", False))
        out += [(v, True) for v in spec.errors.violations(d, m)]
        out += _z_violations(spec, q)
        return out

    if not isinstance(spec, _SCALAR_FAMILIES):
        return [(f"unknown spec type {type(spec).__name__}", True)]

    if spec.latent_var < 0:
        out.append(("latent variance negative", True))
    if spec.sigma2_delta < 0:
        out.append(("sigma2_delta negative", True))
    if spec.sigma2_e < 0:
        out.append(("sigma2_e negative", True))
    if spec.x_var <= 0:
        out.append(("Var(x) must be positive", False))

    if isinstance(spec, PolynomialSpec):
        if spec.degree < 2:
            out.append(("polynomial degree must be a fixed, known k >= 2", False))
        stacked = np.array(
            [
                [spec.sigma2_eps, spec.sigma_eps_delta],
                [spec.sigma_eps_delta, spec.sigma2_delta],
            ]
        )
        if min_eigenvalue(stacked) < -_PSD_TOL * max(np.max(np.abs(stacked)), 1.0):
            out.append(("error covariance not PSD (stacked (eps, delta) covariance)", True))
        out += _z_violations(spec, spec.z_dim)
    if isinstance(spec, QuadraticSpec) and spec.reliability_floor is not None:
        k0 = spec.reliability_floor
        if not 0 < k0 <= 0.5:
            out.append(("reliability floor must lie in (0, 1/2]", False))
        elif spec.x_var > 0 and spec.reliability < k0 - 1e-12:
            out.append(("reliability ratio below its declared lower bound", False))
    if isinstance(spec, TrigSpec):
        if spec.sin_amps.shape != spec.cos_amps.shape:
            out.append(("cos_amps and sin_amps must have equal length", True))
        if spec.freq <= 0:
            out.append(("trigonometric frequency must be positive", True))
    if isinstance(spec, AbsSpec):
        if spec.latent_var <= 0:
            out.append(("absolute_value family requires positive latent variance", False))
        if spec.sigma2_delta <= 0:
            out.append(("absolute_value family requires positive sigma2_delta", False))
    return out


def validate(spec: ModelSpec) -> list[str]:
    """Check all family-relevant model assumptions; empty list means valid."""
    return [v for v, _ in _checks(spec)]


def _z_violations(spec, q: int) -> list[tuple[str, bool]]:
    if q == 0:
        if spec.z_dist is not None and spec.z_dist.dim != 0:
            return [("z distribution given but model has no z slopes", True)]
        return []
    if spec.z_dist is None:
        return [("z distribution required when z slopes are present", True)]
    if spec.z_dist.dim != q:
        return [("z distribution dimension does not match z slopes", True)]
    return [(v, "singular" not in v) for v in spec.z_dist.violations()]


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HiddenTruth:
    """Per-observation latent draws kept for oracle checks."""

    xi: np.ndarray  # (n, m)
    delta: np.ndarray  # (n, m)
    e: np.ndarray  # (n, d)
    eps: np.ndarray  # (n, d)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observed sample plus optional hidden truth and the seed that made it."""

    y: np.ndarray  # (n, d)
    z: np.ndarray  # (n, q)
    x: np.ndarray  # (n, m)
    seed: int
    hidden: Optional[HiddenTruth] = None

    @property
    def n(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True, eq=False)
class NewSubject:
    """A fresh draw together with its noiseless regression value."""

    z0: np.ndarray  # (q,)
    x0: np.ndarray  # (m,)
    y0: np.ndarray  # (d,)
    eta0: np.ndarray  # (d,), regression surface at (z0, xi0)
    xi0: np.ndarray  # (m,), hidden latent draw (kept for oracle checks)


def _draw(spec: ModelSpec, n: int, rng: np.random.Generator):
    """Draw n i.i.d. observations; returns (y, z, x, hidden)."""
    if isinstance(spec, LinearSpec):
        d, q, m = spec.response_dim, spec.z_dim, spec.latent_dim
        mu = spec.latent_mean
        latent_cov = spec.latent_cov
        errors = spec.errors
        z_dist = spec.z_dist
    else:
        d, m = 1, 1
        q = spec.z_dim
        mu = np.array([spec.latent_mean])
        latent_cov = np.array([[spec.latent_var]])
        if isinstance(spec, PolynomialSpec):
            errors = spec.error_structure()
        else:
            errors = ErrorStructure.scalar(sigma2_e=spec.sigma2_e, sigma2_delta=spec.sigma2_delta)
        z_dist = getattr(spec, "z_dist", None)

    z = z_dist.sample(rng, n) if (q and z_dist is not None) else np.zeros((n, q))
    xi = mu + rng.standard_normal((n, m)) @ cholesky_psd(latent_cov).T
    meas = rng.standard_normal((n, d + m)) @ cholesky_psd(errors.stacked_measurement_cov()).T
    eps, delta = meas[:, :d], meas[:, d:]
    e = rng.standard_normal((n, d)) @ cholesky_psd(errors.sigma_e).T
    x = xi + delta
    y = spec.regression(z, xi) + e + eps
    return y, z, x, HiddenTruth(xi=xi, delta=delta, e=e, eps=eps)


def sample(spec: ModelSpec, n: int, seed: int, *, keep_hidden: bool = True) -> Dataset:
    """Draw ``n`` i.i.d. observations; deterministic given ``seed``.

    Rejects specs whose joint law is ill-defined; degenerate-but-valid laws
    (point masses, singular surrogate covariance) can still be drawn from
    even though :func:`validate` reports them for estimation purposes.
    """
    violations = [v for v, blocking in _checks(spec) if blocking]
    if violations:
        raise SpecError(violations)
    if n < 1:
        raise SpecError(["sample size must be >= 1"])
    y, z, x, hidden = _draw(spec, n, make_rng(seed))
    return Dataset(y=y, z=z, x=x, seed=int(seed), hidden=hidden if keep_hidden else None)


def new_subject(spec: ModelSpec, seed: int) -> NewSubject:
    """One fresh draw plus the noiseless regression value at its covariates."""
    violations = [v for v, blocking in _checks(spec) if blocking]
    if violations:
        raise SpecError(violations)
    y, z, x, hidden = _draw(spec, 1, make_rng(seed, 0x5EED))
    eta = spec.regression(z, hidden.xi)
    return NewSubject(z0=z[0], x0=x[0], y0=y[0], eta0=eta[0], xi0=hidden.xi[0])


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_SPEC_CLASSES = {
    cls.family: cls
    for cls in (LinearSpec, PolynomialSpec, QuadraticSpec, ExponentialSpec, TrigSpec, AbsSpec)
}


def _to_jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def spec_to_dict(spec: ModelSpec) -> dict:
    """JSON-compatible representation; floats round-trip bit-exactly."""
    out: dict = {"family": spec.family}
    for name in spec.__dataclass_fields__:
        value = getattr(spec, name)
        if value is None:
            out[name] = None
        elif isinstance(value, ZDistribution):
            out[name] = {
                "kind": value.kind,
                "mean": value.mean.tolist(),
                "cov": value.cov.tolist(),
            }
        elif isinstance(value, ErrorStructure):
            out[name] = {
                "sigma_e": value.sigma_e.tolist(),
                "sigma_eps": value.sigma_eps.tolist(),
                "sigma_delta": value.sigma_delta.tolist(),
                "sigma_eps_delta": value.sigma_eps_delta.tolist(),
            }
        else:
            out[name] = _to_jsonable(value)
    return out


def spec_from_dict(data: dict) -> ModelSpec:
    data = dict(data)
    family = data.pop("family", None)
    cls = _SPEC_CLASSES.get(family)
    if cls is None:
        raise SpecError([f"unknown model family {family!r}"])
    kwargs = {}
    for name in cls.__dataclass_fields__:
        if name not in data:
            continue
        value = data.pop(name)
        if name == "z_dist":
            value = None if value is None else ZDistribution(**value)
        elif name == "errors":
            value = ErrorStructure(**value)
        kwargs[name] = value
    if data:
        raise SpecError([f"unknown spec fields: {sorted(data)}"])
    return cls(**kwargs)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _csv_header(d: int, q: int, m: int, hidden: bool) -> list[str]:
    cols = [f"y_{i + 1}" for i in range(d)]
    cols += [f"z_{i + 1}" for i in range(q)]
    cols += [f"x_{i + 1}" for i in range(m)]
    if hidden:
        cols += [f"hidden_xi_{i + 1}" for i in range(m)]
        cols += [f"hidden_delta_{i + 1}" for i in range(m)]
        cols += [f"hidden_e_{i + 1}" for i in range(d)]
        cols += [f"hidden_eps_{i + 1}" for i in range(d)]
    return cols


def save_dataset(data: Dataset, spec: ModelSpec, prefix) -> tuple[Path, Path]:
    """Write ``<prefix>.csv`` and ``<prefix>.spec.json``; returns both paths."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = prefix.with_suffix(".csv")
    json_path = prefix.with_suffix(".spec.json")

    d, q, m = data.y.shape[1], data.z.shape[1], data.x.shape[1]
    blocks = [data.y, data.z, data.x]
    if data.hidden is not None:
        blocks += [data.hidden.xi, data.hidden.delta, data.hidden.e, data.hidden.eps]
    table = np.hstack(blocks)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_csv_header(d, q, m, data.hidden is not None))
        for row in table:
            writer.writerow([_fmt(v) for v in row])

    sidecar = {
        "schema_version": 1,
        "spec": spec_to_dict(spec),
        "seed": data.seed,
        "n": data.n,
        "has_hidden": data.hidden is not None,
    }
    with open(json_path, "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    return csv_path, json_path


def load_dataset(prefix) -> tuple[Dataset, ModelSpec]:
    """Read back a dataset written by :func:`save_dataset`."""
    prefix = Path(prefix)
    csv_path = prefix.with_suffix(".csv")
    json_path = prefix.with_suffix(".spec.json")
    with open(json_path) as fh:
        sidecar = json.load(fh)
    spec = spec_from_dict(sidecar["spec"])
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(v) for v in row] for row in reader])

    def block(prefix_name: str) -> np.ndarray:
        idx = [i for i, name in enumerate(header) if name.startswith(prefix_name)]
        return rows[:, idx] if rows.size else np.zeros((0, len(idx)))

    y, z, x = block("y_"), block("z_"), block("x_")
    hidden = None
    if sidecar.get("has_hidden"):
        hidden = HiddenTruth(
            xi=block("hidden_xi_"),
            delta=block("hidden_delta_"),
            e=block("hidden_e_"),
            eps=block("hidden_eps_"),
        )
    return Dataset(y=y, z=z, x=x, seed=int(sidecar["seed"]), hidden=hidden), spec
