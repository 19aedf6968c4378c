import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from barygd.core import CouplingEnsemble, Weights
from barygd.cost import cost_gradient, cost_value, empirical_cost

from conftest import central_diff


@pytest.mark.parametrize(
    "lam, x, expected",
    [
        ([0.5, 0.5], [[3.7], [3.7]], 0.0),
        ([0.5, 0.5], [[1.0], [0.0]], 0.25),
        ([1 / 3, 1 / 3, 1 / 3], [[0.0], [1.0], [2.0]], 2 / 3),
    ],
)
def test_cost_value_examples(lam, x, expected):
    assert cost_value(np.array(x), lam) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "lam, x, expected",
    [
        ([0.5, 0.5], [[1.0], [1.0]], [[0.0], [0.0]]),
        ([0.5, 0.5], [[1.0], [0.0]], [[0.5], [-0.5]]),
        ([0.25, 0.75], [[3.0], [-1.0]], [[1.5], [-1.5]]),
    ],
)
def test_cost_gradient_examples(lam, x, expected):
    np.testing.assert_allclose(cost_gradient(np.array(x), lam), expected, atol=1e-14)


def test_gradient_matches_finite_differences(rng):
    for _ in range(100):
        n, d = rng.integers(2, 5), rng.integers(1, 4)
        lam = rng.dirichlet(np.ones(n))
        x = rng.standard_normal((n, d)) * 3
        fd = central_diff(lambda z: cost_value(z.reshape(n, d), lam), x.ravel()).reshape(n, d)
        np.testing.assert_allclose(cost_gradient(x, lam), fd, rtol=1e-5, atol=1e-8)


def test_weighted_blocks_sum_to_zero(rng):
    for _ in range(100):
        n, d = rng.integers(2, 6), rng.integers(1, 4)
        x = rng.standard_normal((n, d)) * 5
        g = cost_gradient(x, rng.dirichlet(np.ones(n)))
        assert np.max(np.abs(g.sum(axis=0))) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(
    x=arrays(np.float64, (3, 2), elements=st.floats(-100, 100)),
    v=arrays(np.float64, (2,), elements=st.floats(-100, 100)),
)
def test_nonnegative_and_translation_invariant(x, v):
    lam = [0.2, 0.3, 0.5]
    c = cost_value(x, lam)
    assert c >= 0
    assert cost_value(x + v, lam) == pytest.approx(c, rel=1e-9, abs=1e-9)


def test_zero_iff_equal():
    assert cost_value(np.array([[1.0, 2.0]] * 3), [0.2, 0.3, 0.5]) == 0.0
    assert cost_value(np.array([[1.0, 2.0], [1.0, 2.0], [1.0, 2.0 + 1e-6]]), [0.2, 0.3, 0.5]) > 0


def test_empirical_cost_examples():
    e = CouplingEnsemble(np.ones((4, 2, 1)), Weights([0.5, 0.5]))
    assert empirical_cost(e).mean_cost == 0.0
    e = CouplingEnsemble(np.array([[[1.0], [0.0]], [[0.0], [1.0]]]), Weights([0.5, 0.5]))
    assert empirical_cost(e).mean_cost == pytest.approx(0.25)
    e = CouplingEnsemble(np.array([[[0.0], [1.0], [2.0]]]), Weights.uniform(3))
    rep = empirical_cost(e)
    assert rep.mean_cost == pytest.approx(2 / 3)
    assert rep.per_particle.shape == (1,)


def test_rejects_mismatched_weights():
    with pytest.raises(ValueError):
        cost_value(np.zeros((3, 1)), [0.5, 0.5])
