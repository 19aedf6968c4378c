"""Domain types shared across the package.

Particles of a coupling are stored as a single ``(N, n, d)`` array: ``N``
particles, each an ``n``-tuple of points in ``R^d`` (one coordinate block per
marginal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

WEIGHT_SUM_TOL = 1e-12


class DomainError(ValueError):
    """A point fell outside the support of a marginal."""

    def __init__(self, message, marginal=None, particle=None):
        super().__init__(message)
        self.marginal = marginal
        self.particle = particle


class Weights:
    """Strictly positive barycentric weights summing to one."""

    __slots__ = ("_values",)

    def __init__(self, values):
        values = np.array(values, dtype=float).ravel()
        if values.size < 1:
            raise ValueError("weights must be non-empty")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ValueError(f"weights must be strictly positive, got {values.tolist()}")
        if abs(math.fsum(values) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1, got sum {math.fsum(values)!r}")
        values.setflags(write=False)
        self._values = values

    @classmethod
    def uniform(cls, n):
        w = np.full(n, 1.0 / n)
        # Absorb rounding into the last entry so the sum is exactly 1.
        w[-1] = 1.0 - math.fsum(w[:-1])
        return cls(w)

    @property
    def values(self):
        return self._values

    def __len__(self):
        return self._values.size

    def __iter__(self):
        return iter(self._values.tolist())

    def __eq__(self, other):
        return isinstance(other, Weights) and np.array_equal(self._values, other._values)

    def __repr__(self):
        return f"Weights({self._values.tolist()})"


@dataclass(frozen=True)
class CouplingEnsemble:
    """``N`` particles of an ``n``-marginal coupling in ``R^d``."""

    particles: np.ndarray
    weights: Weights

    def __post_init__(self):
        x = np.array(self.particles, dtype=float)
        if x.ndim == 2:
            x = x[:, :, None]
        if x.ndim != 3:
            raise ValueError(f"particles must have shape (N, n, d), got {x.shape}")
        N, n, d = x.shape
        if N < 1 or n < 1 or d < 1:
            raise ValueError(f"empty ensemble of shape {x.shape}")
        if n != len(self.weights):
            raise ValueError(f"{n} marginal blocks but {len(self.weights)} weights")
        if not np.all(np.isfinite(x)):
            raise ValueError("ensemble contains non-finite coordinates")
        x.setflags(write=False)
        object.__setattr__(self, "particles", x)

    @property
    def n_particles(self):
        return self.particles.shape[0]

    @property
    def n_marginals(self):
        return self.particles.shape[1]

    @property
    def dim(self):
        return self.particles.shape[2]

    def batch(self, j):
        """The ``(N, d)`` points associated with marginal ``j``."""
        return self.particles[:, j, :]

    def replace(self, particles):
        return CouplingEnsemble(particles, self.weights)


def project_barycenter(ensemble):
    """Push the coupling forward by ``T(x) = sum_j lambda_j x_j``.

    Returns an ``(N, d)`` array.
    """
    return np.einsum("j,ijk->ik", ensemble.weights.values, ensemble.particles)


# --------------------------------------------------------------------------
# Marginals
# --------------------------------------------------------------------------


def _as_mean_cov(mean, cov):
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.asarray(cov, dtype=float)
    d = mean.size
    if cov.ndim == 0:
        cov = cov * np.eye(d)
    elif cov.ndim == 1:
        cov = np.diag(cov)
    if cov.shape != (d, d):
        raise ValueError(f"covariance shape {cov.shape} does not match mean of size {d}")
    if not np.allclose(cov, cov.T, atol=1e-12, rtol=0):
        raise ValueError("covariance must be symmetric")
    if np.linalg.eigvalsh(cov).min() <= 0:
        raise ValueError("covariance must be positive definite")
    return mean, cov


class GaussianMarginal:
    """Gaussian target ``N(mean, cov)``."""

    kind = "gaussian"

    def __init__(self, mean, cov):
        self.mean, self.cov = _as_mean_cov(mean, cov)
        self.precision = np.linalg.inv(self.cov)
        self.chol = np.linalg.cholesky(self.cov)

    @property
    def dim(self):
        return self.mean.size

    def in_support(self, x):
        x = np.asarray(x, dtype=float)
        return np.all(np.isfinite(x), axis=-1)

    def clamp(self, x, margin=1e-6):
        return np.asarray(x, dtype=float), 0

    def log_density(self, x):
        z = np.asarray(x, dtype=float) - self.mean
        return -0.5 * np.einsum("...i,ij,...j->...", z, self.precision, z)

    def score(self, x):
        z = np.asarray(x, dtype=float) - self.mean
        return -z @ self.precision.T

    def sample(self, rng, count):
        return self.mean + rng.standard_normal((count, self.dim)) @ self.chol.T

    def to_dict(self):
        return {"kind": "gaussian", "mean": self.mean.tolist(), "cov": self.cov.tolist()}

    def __eq__(self, other):
        return type(other) is type(self) and other.to_dict() == self.to_dict()

    __hash__ = None

    def __repr__(self):
        return f"GaussianMarginal(mean={self.mean.tolist()}, cov={self.cov.tolist()})"


class IdentityMap:
    name = "identity"
    support = (-math.inf, math.inf)

    def forward(self, u):
        return u

    def inverse(self, y):
        return y

    def log_deriv(self, u):
        return np.zeros_like(u)

    def dlog_deriv(self, u):
        """Derivative of ``log g'(u)`` with respect to ``u``."""
        return np.zeros_like(u)

    def to_dict(self):
        return {"kind": "identity"}


class AffineMap:
    """``g(u) = scale * u + shift`` with ``scale > 0``."""

    name = "affine"
    support = (-math.inf, math.inf)

    def __init__(self, scale, shift=0.0):
        if not scale > 0:
            raise ValueError("affine map must be increasing (scale > 0)")
        self.scale = float(scale)
        self.shift = float(shift)

    def forward(self, u):
        return self.scale * u + self.shift

    def inverse(self, y):
        return (y - self.shift) / self.scale

    def log_deriv(self, u):
        return np.full_like(u, math.log(self.scale))

    def dlog_deriv(self, u):
        return np.zeros_like(u)

    def to_dict(self):
        return {"kind": "affine", "scale": self.scale, "shift": self.shift}


class ArctanMap:
    name = "arctan"
    support = (-math.pi / 2, math.pi / 2)

    def forward(self, u):
        return np.arctan(u)

    def inverse(self, y):
        return np.tan(y)

    def log_deriv(self, u):
        return -np.log1p(u * u)

    def dlog_deriv(self, u):
        return -2.0 * u / (1.0 + u * u)

    def to_dict(self):
        return {"kind": "arctan"}


MAPS = {"identity": IdentityMap, "affine": AffineMap, "arctan": ArctanMap}


def make_map(desc):
    if isinstance(desc, str):
        desc = {"kind": desc}
    desc = dict(desc)
    kind = desc.pop("kind")
    try:
        cls = MAPS[kind]
    except KeyError:
        raise ValueError(f"unknown map {kind!r}; expected one of {sorted(MAPS)}") from None
    return cls(**desc)


class PushforwardMarginal:
    """Law of ``g(U)`` for ``U ~ N(m, s^2)`` and an increasing 1D map ``g``.

    The log-density follows from the change of variables
    ``log rho(y) = log phi(u) - log g'(u)`` with ``u = g^{-1}(y)``.
    """

    kind = "pushforward"

    def __init__(self, base, map):
        if base.dim != 1:
            raise ValueError("pushforward marginals are one-dimensional")
        self.base = base
        self.map = map
        self._m = float(base.mean[0])
        self._v = float(base.cov[0, 0])

    @property
    def dim(self):
        return 1

    @property
    def support(self):
        return self.map.support

    def in_support(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.support
        return np.all((x > a) & (x < b), axis=-1)

    def clamp(self, x, margin=1e-6):
        """Clip into the support shrunk by ``margin``; returns (x, count clipped)."""
        x = np.asarray(x, dtype=float)
        a, b = self.support
        lo, hi = a + margin, b - margin
        out = ~((x >= lo) & (x <= hi))
        if not out.any():
            return x, 0
        return np.clip(np.nan_to_num(x, nan=0.0), lo, hi), int(out.sum())

    def log_density(self, x):
        y = np.asarray(x, dtype=float)[..., 0]
        u = self.map.inverse(y)
        return -0.5 * (u - self._m) ** 2 / self._v - self.map.log_deriv(u)

    def score(self, x):
        y = np.asarray(x, dtype=float)[..., 0]
        u = self.map.inverse(y)
        du_dy = np.exp(-self.map.log_deriv(u))
        s = (-(u - self._m) / self._v - self.map.dlog_deriv(u)) * du_dy
        return s[..., None]

    def sample(self, rng, count):
        return self.map.forward(self.base.sample(rng, count))

    def to_dict(self):
        return {"kind": "pushforward", "base": self.base.to_dict(), "map": self.map.to_dict()}

    def __eq__(self, other):
        return type(other) is type(self) and other.to_dict() == self.to_dict()

    __hash__ = None

    def __repr__(self):
        return f"PushforwardMarginal(base={self.base!r}, map={self.map.name})"


Marginal = Union[GaussianMarginal, PushforwardMarginal]


def marginal_score(spec, x, index=None):
    """Score ``grad log mu(x)`` of a marginal, checking the support.

    ``x`` may be a single point or an ``(..., d)`` array.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    if scalar:
        x = x[None]
    ok = np.atleast_1d(spec.in_support(x))
    if not np.all(ok):
        particle = int(np.flatnonzero(~ok)[0]) if x.ndim > 1 else None
        point = x[particle] if particle is not None else x
        where = f"marginal {index}" if index is not None else "the marginal"
        raise DomainError(
            f"point {point.tolist()} lies outside the support of {where}",
            marginal=index,
            particle=particle,
        )
    s = spec.score(x)
    return s[0] if scalar else s


# --------------------------------------------------------------------------
# Run configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SVGDBackendSpec:
    bandwidth: Union[float, str] = 1.0  # positive float or "median"
    recompute_every: int = 1
    kind: str = "svgd"


@dataclass(frozen=True)
class LAWGDBackendSpec:
    """Grid bounds default to mean +/- 8 std of each marginal."""

    a: Optional[float] = None
    b: Optional[float] = None
    M: int = 1024
    K: int = 64
    kind: str = "lawgd"


@dataclass(frozen=True)
class InitPolicy:
    """``from-marginals`` draws batch j from mu_j; ``common`` gives every
    marginal block of particle i the same draw from one Gaussian."""

    kind: str = "from-marginals"
    mean: Optional[tuple] = None
    cov: Optional[tuple] = None


@dataclass(frozen=True)
class EvalSpec:
    """Reference barycenter for W2 tracking.

    ``kind`` is ``gaussian-oracle`` (closed-form barycenter of Gaussian
    marginals) or ``gaussian`` (explicit mean/cov).
    """

    kind: str = "gaussian-oracle"
    mean: Optional[tuple] = None
    cov: Optional[tuple] = None
    reference_size: int = 10_000
    every: int = 1


@dataclass(frozen=True)
class RunConfig:
    marginals: tuple
    weights: Weights
    n_particles: int
    backend: Union[SVGDBackendSpec, LAWGDBackendSpec]
    schedule: object
    iterations: int
    seed: int = 0
    init: InitPolicy = field(default_factory=InitPolicy)
    eval: Optional[EvalSpec] = None
    stride: int = 0
    allow_single_marginal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        n = len(self.marginals)
        min_n = 1 if self.allow_single_marginal else 2
        if n < min_n:
            raise ValueError(f"need at least {min_n} marginals, got {n}")
        if len(self.weights) != n:
            raise ValueError(f"{n} marginals but {len(self.weights)} weights")
        dims = {m.dim for m in self.marginals}
        if len(dims) != 1:
            raise ValueError(f"marginals have inconsistent dimensions {sorted(dims)}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.n_particles < 1:
            raise ValueError(f"n_particles must be >= 1, got {self.n_particles}")
        if self.stride < 0:
            raise ValueError("stride must be >= 0")

    @property
    def dim(self):
        return self.marginals[0].dim
