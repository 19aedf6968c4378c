"""Spectral (LAWGD) penalization for one-dimensional marginals.

The generator ``L = f'' - V' f'`` of the diffusion with stationary law
``pi ~ exp(-V)`` is conjugated to the Schrodinger operator
``H = -d^2/dx^2 + W`` with ``W = V'^2 / 4 - V'' / 2`` by ``psi = exp(V/2) phi``.
``H`` is discretized by second-order finite differences with zero boundary
values, which gives a symmetric tridiagonal eigenproblem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

DEFAULT_M = 1024
DEFAULT_K = 64
GRID_HALF_WIDTH = 8.0
ORTHONORMALITY_TOL = 1e-6


class SpectralError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralKernel:
    grid: np.ndarray  # (M,)
    eigenvalues: np.ndarray  # (K,), ascending, ground state removed
    eigenfunctions: np.ndarray  # (K, M), orthonormal in discrete L2(pi)
    derivatives: np.ndarray  # (K, M), centred differences of eigenfunctions
    weights: np.ndarray  # (M,), discrete pi quadrature weights, sum to 1
    ground_energy: float

    @property
    def a(self):
        return float(self.grid[0])

    @property
    def b(self):
        return float(self.grid[-1])

    @property
    def spacing(self):
        return float(self.grid[1] - self.grid[0])

    def gram(self):
        return (self.eigenfunctions * self.weights) @ self.eigenfunctions.T

    def _locate(self, x):
        """Interpolation indices and weights; clamps to the grid."""
        x = np.asarray(x, dtype=float)
        outside = int(np.count_nonzero((x < self.a) | (x > self.b)))
        x = np.clip(x, self.a, self.b)
        pos = (x - self.a) / self.spacing
        idx = np.minimum(pos.astype(int), self.grid.size - 2)
        return idx, pos - idx, outside

    def interpolate(self, table, x):
        """Linear interpolation of every row of ``table`` at ``x``; returns ``(values, n_clamped)``."""
        idx, frac, outside = self._locate(x)
        return table[:, idx] * (1.0 - frac) + table[:, idx + 1] * frac, outside


def default_grid_bounds(spec):
    """``mean -/+ 8 std``; for a pushforward, the image of the base bounds under the map."""
    if spec.kind == "gaussian":
        m, s = float(spec.mean[0]), float(np.sqrt(spec.cov[0, 0]))
        return m - GRID_HALF_WIDTH * s, m + GRID_HALF_WIDTH * s
    m, s = float(spec.base.mean[0]), float(np.sqrt(spec.base.cov[0, 0]))
    lo, hi = spec.map.forward(np.array([m - GRID_HALF_WIDTH * s, m + GRID_HALF_WIDTH * s]))
    return float(lo), float(hi)


def _potential_derivatives(spec, x):
    dV = -spec.score(x[:, None])[:, 0]
    if spec.kind == "gaussian":
        d2V = np.full_like(x, float(spec.precision[0, 0]))
    else:
        eps = 1e-5 * max(1.0, float(np.max(np.abs(x))))
        d2V = -(spec.score((x + eps)[:, None])[:, 0] - spec.score((x - eps)[:, None])[:, 0]) / (2 * eps)
    return dV, d2V


def build_spectral_kernel(spec, a=None, b=None, M=DEFAULT_M, K=DEFAULT_K):
    """Eigenpairs ``(lambda_k, psi_k)``, ``k = 1..K``, of ``-L`` for a 1D target."""
    if spec.dim != 1:
        raise ValueError("the spectral kernel is only available for one-dimensional marginals")
    if a is None or b is None:
        da, db = default_grid_bounds(spec)
        a = da if a is None else a
        b = db if b is None else b
    if not a < b:
        raise ValueError(f"grid bounds must satisfy a < b, got ({a}, {b})")
    if M < 64:
        raise ValueError(f"M must be >= 64, got {M}")
    if not 1 <= K < M:
        raise ValueError(f"K must satisfy 1 <= K < M, got K={K}, M={M}")
    x = np.linspace(a, b, M)
    if not np.all(spec.in_support(x[:, None])):
        raise ValueError(f"grid [{a}, {b}] leaves the support of the target")
    dx = x[1] - x[0]
    dV, d2V = _potential_derivatives(spec, x)
    W = 0.25 * dV**2 - 0.5 * d2V
    diag = 2.0 / dx**2 + W
    off = np.full(M - 1, -1.0 / dx**2)
    energies, phi = eigh_tridiagonal(diag, off, select="i", select_range=(0, K))
    V = -spec.log_density(x[:, None])
    V = V - V.min()
    pi = np.exp(-V)
    Z = pi.sum()
    pi /= Z
    # With pi_i = exp(-V_i) / Z, psi = sqrt(Z) exp(V/2) phi is pi-orthonormal.
    psi = (phi[:, 1:] * (np.sqrt(Z) * np.exp(0.5 * V))[:, None]).T
    lam = energies[1:] - energies[0]
    kern = SpectralKernel(
        grid=x,
        eigenvalues=lam,
        eigenfunctions=psi,
        derivatives=np.gradient(psi, dx, axis=1),
        weights=pi,
        ground_energy=float(energies[0]),
    )
    if np.any(lam <= 0) or np.any(np.diff(lam) <= 0):
        raise SpectralError("spectrum is not strictly positive and ascending; refine the grid")
    err = np.max(np.abs(kern.gram() - np.eye(K)))
    if err > ORTHONORMALITY_TOL:
        raise SpectralError(f"eigenfunctions are not orthonormal (error {err:.2e}); refine the grid")
    return kern


def lawgd_kernel_grad(kern, x, y):
    """``sum_k psi_k(x) psi_k'(y) / lambda_k``, the derivative of ``L^{-1}(x, y)`` in ``y``."""
    vx, _ = kern.interpolate(kern.eigenfunctions, np.atleast_1d(x))
    dy, _ = kern.interpolate(kern.derivatives, np.atleast_1d(y))
    out = np.sum(vx * dy / kern.eigenvalues[:, None], axis=0)
    return float(out[0]) if np.ndim(x) == 0 and np.ndim(y) == 0 else out


def lawgd_direction(batch, kern):
    """``(1/N) sum_j d/dx L^{-1}(x, x_j)`` at ``x = x_i`` for every particle.

    This is the gradient whose negative moves particle ``i``; it equals
    ``(1/N) sum_j lawgd_kernel_grad(x_j, x_i)``.  Returns
    ``(direction, n_clamped)``.
    """
    batch = np.asarray(batch, dtype=float).ravel()
    vals, outside = kern.interpolate(kern.eigenfunctions, batch)
    ders, _ = kern.interpolate(kern.derivatives, batch)
    coeff = vals.mean(axis=1) / kern.eigenvalues
    return coeff @ ders, outside
