"""Barycentric multimarginal cost ``c(x) = sum_j lambda_j |x_j - T(x)|^2``."""

from dataclasses import dataclass
import math

import numpy as np

from .core import Weights


def _weights(weights):
    return weights.values if isinstance(weights, Weights) else np.asarray(weights, dtype=float)


def _check(x, lam):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[-2] != lam.size:
        raise ValueError(f"tuple of {x.shape[-2]} points but {lam.size} weights")
    return x


def cost_value(x, weights):
    """Cost of one tuple ``x`` of shape ``(n, d)``, or of a stack ``(..., n, d)``."""
    lam = _weights(weights)
    x = _check(x, lam)
    t = np.einsum("j,...jk->...k", lam, x)
    return np.einsum("j,...j->...", lam, np.sum((x - t[..., None, :]) ** 2, axis=-1))


def cost_gradient(x, weights):
    """Gradient of :func:`cost_value`; block ``j`` is ``2 lambda_j (x_j - T(x))``.

    The ``T``-dependence drops out because ``sum_j lambda_j (x_j - T) = 0``.
    """
    lam = _weights(weights)
    x = _check(x, lam)
    t = np.einsum("j,...jk->...k", lam, x)
    return 2.0 * lam[:, None] * (x - t[..., None, :])


@dataclass(frozen=True)
class CostReport:
    mean_cost: float
    per_particle: np.ndarray


def empirical_cost(ensemble):
    per = cost_value(ensemble.particles, ensemble.weights)
    try:
        total = math.fsum(per)
    except OverflowError:
        total = math.inf
    return CostReport(mean_cost=total / per.size, per_particle=per)
