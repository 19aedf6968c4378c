"""Closed-form Gaussian ground truth: barycenter, Bures-Wasserstein distance, sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def _sym(a):
    return 0.5 * (a + a.T)


def sqrtm_psd(a):
    """Symmetric square root through an eigendecomposition."""
    w, v = np.linalg.eigh(_sym(a))
    w = np.clip(w, 0.0, None)
    return _sym((v * np.sqrt(w)) @ v.T)


def _sqrt_and_inv_sqrt(a):
    w, v = np.linalg.eigh(_sym(a))
    if w.min() <= 0:
        raise ValueError("matrix is not positive definite")
    r = np.sqrt(w)
    return _sym((v * r) @ v.T), _sym((v / r) @ v.T)


@dataclass(frozen=True)
class GaussianMeasure:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim == 0:
            cov = cov * np.eye(mean.size)
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean of size {mean.size}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise ValueError("covariance is not symmetric")
        if np.linalg.eigvalsh(cov).min() <= 0:
            raise ValueError("covariance is not positive definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", _sym(cov))

    @property
    def dim(self):
        return self.mean.size

    def to_dict(self):
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}


def barycenter_map(S, covs, weights):
    """One step ``S -> S^{-1/2} (sum_i l_i (S^{1/2} S_i S^{1/2})^{1/2})^2 S^{-1/2}``."""
    r, ri = _sqrt_and_inv_sqrt(S)
    inner = sum(w * sqrtm_psd(r @ Si @ r) for w, Si in zip(weights, covs))
    return _sym(ri @ inner @ inner @ ri)


def gaussian_barycenter(measures, weights, tol=1e-12, max_iter=1000):
    """Wasserstein barycenter of Gaussians via the fixed-point iteration.

    Starts from ``sum_i l_i S_i`` and stops once successive iterates differ
    by less than ``tol`` in Frobenius norm.
    """
    weights = getattr(weights, "values", weights)
    weights = np.asarray(weights, dtype=float)
    if len(measures) != weights.size:
        raise ValueError(f"{len(measures)} measures but {weights.size} weights")
    dims = {g.dim for g in measures}
    if len(dims) != 1:
        raise ValueError(f"measures have inconsistent dimensions {sorted(dims)}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    covs = [g.cov for g in measures]
    mean = sum(w * g.mean for w, g in zip(weights, measures))
    S = sum(w * Si for w, Si in zip(weights, covs))
    residual = np.inf
    for _ in range(max_iter):
        S_next = barycenter_map(S, covs, weights)
        residual = np.linalg.norm(S_next - S, "fro")
        S = S_next
        if residual < tol:
            return GaussianMeasure(mean, S)
    raise ConvergenceError(
        f"barycenter iteration did not converge in {max_iter} steps (residual {residual:.3e})",
        residual,
    )


def fixed_point_residual(S, measures, weights):
    weights = np.asarray(getattr(weights, "values", weights), dtype=float)
    return float(np.linalg.norm(barycenter_map(S, [g.cov for g in measures], weights) - S, "fro"))


def _bures_sq(S1, S2):
    r1 = sqrtm_psd(S1)
    return np.trace(S1) + np.trace(S2) - 2.0 * np.trace(sqrtm_psd(r1 @ S2 @ r1))


def bures_w2(g1, g2):
    """``W2`` between Gaussians: ``|m1 - m2|^2 + tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2)``.

    The trace term is averaged over both argument orders so the result is
    symmetric to rounding.
    """
    if g1.dim != g2.dim:
        raise ValueError(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    cov_term = 0.5 * (_bures_sq(g1.cov, g2.cov) + _bures_sq(g2.cov, g1.cov))
    sq = float(np.sum((g1.mean - g2.mean) ** 2) + cov_term)
    return float(np.sqrt(max(sq, 0.0)))


def gaussian_sample(g, count, seed=None, rng=None):
    """``count`` i.i.d. draws ``m + L z`` with ``L`` the Cholesky factor of the covariance."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if rng is None:
        rng = np.random.default_rng(seed)
    L = np.linalg.cholesky(g.cov)
    return g.mean + rng.standard_normal((count, g.dim)) @ L.T


def fit_gaussian(points):
    """Moment-matched Gaussian of a point cloud (sample mean, unbiased covariance)."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    cov = np.atleast_2d(np.cov(points, rowvar=False))
    return GaussianMeasure(points.mean(axis=0), cov)
