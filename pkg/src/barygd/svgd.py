"""Kernelized (SVGD) estimate of the marginal penalization direction."""

import numpy as np

from .core import DomainError
from .kernels import kernel_matrix

SUPPORT_MARGIN = 1e-6


def svgd_directions(batch, spec, bandwidth=1.0, clamp=False, marginal=None):
    """SVGD direction for every particle of one marginal batch.

    ``phi(x_i) = (1/N) sum_l [k(x_i, x_l) score(x_l) + grad_2 k(x_i, x_l)]``

    Points outside the support raise :class:`DomainError` unless ``clamp``
    is set, in which case the score is evaluated at the nearest point just
    inside the support.  Returns ``(directions, n_clamped)``.
    """
    batch = np.asarray(batch, dtype=float)
    if batch.ndim == 1:
        batch = batch[:, None]
    N = batch.shape[0]
    if N == 0:
        raise ValueError("empty batch")
    n_clamped = 0
    at = batch
    inside = spec.in_support(batch)
    if not np.all(inside):
        if not clamp:
            i = int(np.flatnonzero(~inside)[0])
            raise DomainError(
                f"particle {i} of marginal {marginal} at {batch[i].tolist()} is outside the support",
                marginal=marginal,
                particle=i,
            )
        at, n_clamped = spec.clamp(batch, SUPPORT_MARGIN)
    K, diff = kernel_matrix(batch, bandwidth)
    drift = K @ spec.score(at)
    repulsion = (2.0 / bandwidth) * np.einsum("il,ilk->ik", K, diff)
    return (drift + repulsion) / N, n_clamped


def svgd_direction(batch, spec, kernel_bandwidth, query_index):
    """Direction for a single query particle (see :func:`svgd_directions`)."""
    return svgd_directions(batch, spec, kernel_bandwidth)[0][query_index]
