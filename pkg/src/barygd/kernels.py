"""Gaussian kernel ``k(x, y) = exp(-|x - y|^2 / b)`` and bandwidth rules."""

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.spatial.distance import pdist


@dataclass(frozen=True)
class KernelSpec:
    """``bandwidth`` is a positive float or ``"median"``.

    With ``"median"`` the bandwidth is recomputed from the batch every
    ``recompute_every`` iterations.
    """

    bandwidth: Union[float, str] = 1.0
    recompute_every: int = 1

    def __post_init__(self):
        if self.bandwidth == "median":
            pass
        elif isinstance(self.bandwidth, str) or not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive or 'median', got {self.bandwidth!r}")
        if self.recompute_every < 1:
            raise ValueError("recompute_every must be >= 1")

    @property
    def adaptive(self):
        return self.bandwidth == "median"


def _pair(x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x, y


def kernel_eval(x, y, bandwidth=1.0):
    x, y = _pair(x, y)
    return float(np.exp(-np.sum((x - y) ** 2) / bandwidth))


def kernel_grad2(x, y, bandwidth=1.0):
    """Gradient of ``k(x, y)`` with respect to ``y``."""
    x, y = _pair(x, y)
    return (2.0 / bandwidth) * (x - y) * np.exp(-np.sum((x - y) ** 2) / bandwidth)


def kernel_matrix(points, bandwidth=1.0):
    """Returns ``(K, diff)`` with ``K[i, l] = k(x_i, x_l)`` and ``diff[i, l] = x_i - x_l``."""
    diff = points[:, None, :] - points[None, :, :]
    K = np.exp(-np.einsum("ilk,ilk->il", diff, diff) / bandwidth)
    return K, diff


def median_bandwidth(points):
    """Median pairwise squared distance over ``log(N + 1)``; 1 if all points coincide."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    N = points.shape[0]
    if N < 2:
        raise ValueError("median bandwidth needs at least 2 points")
    med = float(np.median(pdist(points, "sqeuclidean")))
    if med == 0.0:
        return 1.0
    return med / np.log(N + 1)
