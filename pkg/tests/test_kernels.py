import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from barygd.kernels import KernelSpec, kernel_eval, kernel_grad2, kernel_matrix, median_bandwidth

from conftest import central_diff


def test_eval_examples():
    assert kernel_eval([0.3, -1.0], [0.3, -1.0]) == 1.0
    assert kernel_eval(0.0, 1.0, 1.0) == pytest.approx(0.367879, abs=1e-6)
    assert kernel_eval(0.0, 1.0, 2.0) == pytest.approx(0.606531, abs=1e-6)


def test_grad2_examples():
    np.testing.assert_array_equal(kernel_grad2([2.0], [2.0]), [0.0])
    np.testing.assert_allclose(kernel_grad2(0.0, 1.0), [-0.735759], atol=1e-6)
    np.testing.assert_allclose(kernel_grad2([0.0, 0.0], [1.0, 0.0]), [-2 / math.e, 0.0], atol=1e-15)


def test_grad2_matches_finite_differences(rng):
    for _ in range(100):
        d = rng.integers(1, 4)
        b = rng.uniform(0.2, 5)
        x, y = rng.standard_normal(d), rng.standard_normal(d)
        fd = central_diff(lambda z: kernel_eval(x, z, b), y)
        np.testing.assert_allclose(kernel_grad2(x, y, b), fd, rtol=1e-6, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(
    x=arrays(np.float64, (2,), elements=st.floats(-5, 5)),
    y=arrays(np.float64, (2,), elements=st.floats(-5, 5)),
    b=st.floats(0.1, 10),
)
def test_symmetry_and_bounds(x, y, b):
    k = kernel_eval(x, y, b)
    assert k == kernel_eval(y, x, b)
    assert 0 <= k <= 1
    np.testing.assert_allclose(kernel_grad2(x, y, b), -kernel_grad2(y, x, b), atol=1e-15)


def test_matrix_matches_pointwise(rng):
    pts = rng.standard_normal((7, 2))
    K, diff = kernel_matrix(pts, 0.7)
    for i in range(7):
        for j in range(7):
            assert K[i, j] == pytest.approx(kernel_eval(pts[i], pts[j], 0.7))
            np.testing.assert_allclose(diff[i, j], pts[i] - pts[j])


def test_median_bandwidth_examples():
    assert median_bandwidth([0.0, 1.0]) == pytest.approx(1 / math.log(3), abs=1e-6)
    assert median_bandwidth([2.0, 2.0, 2.0]) == 1.0
    assert median_bandwidth([0.0, 1.0, 3.0]) == pytest.approx(4 / math.log(4), abs=1e-6)


def test_spec_validation():
    assert KernelSpec("median").adaptive
    for bad in [0.0, -1.0, "mean"]:
        with pytest.raises(ValueError):
            KernelSpec(bad)
    with pytest.raises(ValueError):
        KernelSpec(1.0, recompute_every=0)
