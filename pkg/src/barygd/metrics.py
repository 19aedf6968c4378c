"""Empirical optimal-transport distances, coupling statistics and KDE."""

import numpy as np
from scipy import stats
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

ASSIGNMENT_MAX_POINTS = 2000
REFERENCE_MAX_POINTS = 1000


def _as_cloud(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a


def empirical_w2_1d(a, b):
    """Exact W2 between two equal-size 1D clouds by monotone rearrangement."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size != b.size:
        raise ValueError(f"unequal counts: {a.size} vs {b.size}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def quantile_w2_1d(a, b):
    """Exact W2 between 1D empirical measures of possibly different sizes.

    Integrates the squared difference of the two quantile step functions
    over the union of their breakpoints.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == b.size:
        return float(np.sqrt(np.mean((a - b) ** 2)))
    na, nb = a.size, b.size
    knots = np.union1d(np.arange(1, na + 1) / na, np.arange(1, nb + 1) / nb)
    knots[-1] = 1.0
    widths = np.diff(np.concatenate([[0.0], knots]))
    mid = knots - 0.5 * widths
    ia = np.minimum((mid * na).astype(int), na - 1)
    ib = np.minimum((mid * nb).astype(int), nb - 1)
    return float(np.sqrt(np.sum(widths * (a[ia] - b[ib]) ** 2)))


def empirical_w2_assignment(a, b, max_points=ASSIGNMENT_MAX_POINTS):
    """Exact W2 between equal-size clouds in any dimension via linear assignment."""
    a, b = _as_cloud(a), _as_cloud(b)
    if a.shape != b.shape:
        raise ValueError(f"unequal clouds: {a.shape} vs {b.shape}")
    if a.shape[0] > max_points:
        raise ValueError(f"{a.shape[0]} points exceeds the assignment limit of {max_points}")
    cost = cdist(a, b, "sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].mean()))


def w2_to_reference(cloud, reference, max_points=REFERENCE_MAX_POINTS):
    """W2 between a particle cloud and a (larger) reference sample.

    In 1D the full reference is used through :func:`quantile_w2_1d`.  Otherwise
    the reference is truncated to ``k * N`` points, ``k`` as large as the
    assignment limit allows, and the cloud is replicated ``k`` times so both
    sides carry uniform mass.
    """
    cloud, reference = _as_cloud(cloud), _as_cloud(reference)
    if cloud.shape[1] != reference.shape[1]:
        raise ValueError("cloud and reference dimensions differ")
    if cloud.shape[1] == 1:
        return quantile_w2_1d(cloud, reference)
    N = cloud.shape[0]
    k = max(1, min(reference.shape[0] // N, max_points // N))
    if reference.shape[0] < N:
        raise ValueError("reference sample smaller than the cloud")
    return empirical_w2_assignment(np.repeat(cloud, k, axis=0), reference[: k * N], max_points=max(max_points, N))


def kendall_tau(x, y=None):
    """Kendall rank correlation (tau-b) of paired samples.

    Accepts either two sequences or a single ``(N, 2)`` array of pairs.
    """
    if y is None:
        pairs = np.asarray(x, dtype=float)
        x, y = pairs[:, 0], pairs[:, 1]
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size < 2 or x.size != y.size:
        raise ValueError("kendall_tau needs at least 2 pairs of equal length")
    return float(stats.kendalltau(x, y, variant="b").statistic)


def map_deviation_rms(x, y, fn, central=0.8):
    """RMS of ``y - fn(x)`` over the samples whose ``x`` lies in the central quantile band."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    lo, hi = np.quantile(x, [(1 - central) / 2, (1 + central) / 2])
    keep = (x >= lo) & (x <= hi)
    return float(np.sqrt(np.mean((y[keep] - fn(x[keep])) ** 2)))


def silverman_bandwidth(samples):
    samples = np.asarray(samples, dtype=float).ravel()
    n = samples.size
    if n < 2:
        return 1.0
    iqr = np.subtract(*np.percentile(samples, [75, 25]))
    spread = min(samples.std(ddof=1), iqr / 1.349) if iqr > 0 else samples.std(ddof=1)
    if spread <= 0:
        return 1.0
    return 0.9 * spread * n ** (-0.2)


def kde_1d(samples, bandwidth, query):
    """Gaussian kernel density estimate; ``query`` may be a scalar or an array."""
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth!r}")
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 1:
        raise ValueError("kde_1d needs at least one sample")
    q = np.asarray(query, dtype=float)
    z = (q[..., None] - samples) / bandwidth
    dens = np.exp(-0.5 * z * z).sum(axis=-1) / (samples.size * bandwidth * np.sqrt(2 * np.pi))
    return float(dens) if dens.ndim == 0 else dens
