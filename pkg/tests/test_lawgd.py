import math

import numpy as np
from numpy.polynomial.hermite_e import hermeval
import pytest
from scipy.linalg import eigh

from barygd.core import ArctanMap, GaussianMarginal, PushforwardMarginal
from barygd.lawgd import SpectralError, build_spectral_kernel, lawgd_direction, lawgd_kernel_grad


@pytest.fixture(scope="module")
def ou():
    return build_spectral_kernel(GaussianMarginal(0.0, 1.0))


def test_ou_spectrum(ou):
    np.testing.assert_allclose(ou.eigenvalues[:5], [1, 2, 3, 4, 5], rtol=0.02)
    assert ou.grid[0] == -8 and ou.grid[-1] == 8 and ou.grid.size == 1024


def test_against_dense_eigensolve():
    # dense symmetric solve of the same finite-difference operator, coarser grid
    M = 200
    x = np.linspace(-8, 8, M)
    dx = x[1] - x[0]
    H = (np.diag(np.full(M, 2.0)) - np.diag(np.ones(M - 1), 1) - np.diag(np.ones(M - 1), -1)) / dx**2
    H += np.diag(x**2 / 4 - 0.5)
    E = eigh(H, eigvals_only=True)[:6]
    kern = build_spectral_kernel(GaussianMarginal(0.0, 1.0), M=M, K=5)
    np.testing.assert_allclose(kern.eigenvalues, E[1:] - E[0], rtol=1e-8)


def test_ground_state_excluded(ou):
    assert np.all(ou.eigenvalues > 0.5)
    assert np.all(np.diff(ou.eigenvalues) > 0)


def test_orthonormality(ou):
    assert np.max(np.abs(ou.gram() - np.eye(ou.eigenvalues.size))) <= 1e-6


def test_first_eigenfunction_is_linear(ou):
    inner = np.abs(ou.grid) < 4
    r = np.corrcoef(ou.eigenfunctions[0, inner], ou.grid[inner])[0, 1]
    assert abs(r) >= 0.999


def test_kernel_grad_parity(ou, rng):
    assert abs(lawgd_kernel_grad(ou, 0.0, 0.0)) <= 1e-3
    for x, y in rng.uniform(-3, 3, (50, 2)):
        assert lawgd_kernel_grad(ou, x, y) == pytest.approx(-lawgd_kernel_grad(ou, -x, -y), abs=1e-3)


def _hermite_partial_sum(x, y, K):
    # pi-normalized Hermite functions: psi_k = He_k / sqrt(k!), psi_k' = sqrt(k) psi_{k-1}
    total = 0.0
    for k in range(1, K + 1):
        ck, cm = np.eye(k + 1)[k], np.eye(k)[k - 1]
        psi_k = hermeval(x, ck) / math.sqrt(math.factorial(k))
        dpsi_k = math.sqrt(k) * hermeval(y, cm) / math.sqrt(math.factorial(k - 1))
        total += psi_k * dpsi_k / k
    return total


def test_matches_hermite_partial_sums(rng):
    kern = build_spectral_kernel(GaussianMarginal(0.0, 1.0), K=10)
    for x, y in rng.uniform(-2, 2, (50, 2)):
        assert lawgd_kernel_grad(kern, x, y) == pytest.approx(_hermite_partial_sum(x, y, 10), abs=2e-3)


def test_truncation_consistency_smoothed():
    # the pointwise series has a jump at x = y and converges slowly; tested after smoothing in x
    g = GaussianMarginal(0.0, 1.0)
    y = np.linspace(-3, 3, 61)
    out = []
    for K in (10, 20):
        kern = build_spectral_kernel(g, K=K)
        x, w = kern.grid, kern.weights
        f = np.exp(-((x - 0.5) ** 2) / 1.6 + x**2 / 2)
        f /= np.sum(w * f)
        vals, _ = kern.interpolate(kern.eigenfunctions, x)
        ders, _ = kern.interpolate(kern.derivatives, y)
        out.append(((vals * w * f).sum(axis=1) / kern.eigenvalues) @ ders)
    assert np.max(np.abs(out[0] - out[1])) < 1e-2


def test_direction_examples(ou):
    d, _ = lawgd_direction([0.0], ou)
    assert abs(d[0]) <= 1e-3
    d, _ = lawgd_direction([-1.0, 1.0], ou)
    assert d[0] == pytest.approx(-d[1], abs=1e-3)
    assert abs(d[0]) > 1e-2


def test_direction_is_mean_of_kernel_grads(ou, rng):
    batch = rng.standard_normal(8)
    d, _ = lawgd_direction(batch, ou)
    for i in range(8):
        expected = np.mean([lawgd_kernel_grad(ou, xj, batch[i]) for xj in batch])
        assert d[i] == pytest.approx(expected, abs=1e-12)


def test_direction_points_toward_mode(ou):
    # descending along the direction pulls a lone particle back to the mode
    d, _ = lawgd_direction([1.5], ou)
    assert d[0] > 0


def test_clamping_counted(ou):
    _, n = lawgd_direction([0.0, 9.0, -12.0], ou)
    assert n == 2


def test_pushforward_spectrum_is_positive():
    spec = PushforwardMarginal(GaussianMarginal(0.0, 1.0), ArctanMap())
    kern = build_spectral_kernel(spec, M=1024, K=16)
    assert np.all(kern.eigenvalues > 0)
    assert kern.grid[0] > -np.pi / 2 and kern.grid[-1] < np.pi / 2


@pytest.mark.parametrize("kw", [{"M": 32}, {"K": 0}, {"a": 1.0, "b": -1.0}])
def test_rejects_bad_grid(kw):
    with pytest.raises(ValueError):
        build_spectral_kernel(GaussianMarginal(0.0, 1.0), **kw)


def test_rejects_multivariate():
    with pytest.raises(ValueError):
        build_spectral_kernel(GaussianMarginal([0.0, 0.0], np.eye(2)))


def test_coarse_grid_fails_diagnostically():
    with pytest.raises(SpectralError):
        build_spectral_kernel(GaussianMarginal(0.0, 1.0), a=-40, b=40, M=64, K=60)
