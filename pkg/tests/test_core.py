import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from barygd.core import (
    AffineMap,
    ArctanMap,
    CouplingEnsemble,
    DomainError,
    GaussianMarginal,
    PushforwardMarginal,
    RunConfig,
    SVGDBackendSpec,
    Weights,
    marginal_score,
    project_barycenter,
)
from barygd.dynamics import FixedSchedule

from conftest import central_diff, random_spd


class TestWeights:
    def test_valid(self):
        assert Weights([0.25, 0.75]).values.tolist() == [0.25, 0.75]

    @pytest.mark.parametrize("bad", [[0.5, 0.6], [1.0, 0.0], [1.5, -0.5], [0.5, 0.5 + 2e-12]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            Weights(bad)

    def test_sum_tolerance(self):
        Weights([0.5, 0.5 + 5e-13])

    def test_uniform_sums_exactly(self):
        for n in range(2, 12):
            assert math.fsum(Weights.uniform(n).values) == 1.0

    def test_immutable(self):
        w = Weights([0.5, 0.5])
        with pytest.raises(ValueError):
            w.values[0] = 1.0


class TestEnsemble:
    def test_shape_validation(self):
        w = Weights([0.5, 0.5])
        with pytest.raises(ValueError):
            CouplingEnsemble(np.zeros((3, 3, 1)), w)
        with pytest.raises(ValueError):
            CouplingEnsemble(np.full((2, 2, 1), np.nan), w)

    def test_2d_input_means_d1(self):
        e = CouplingEnsemble(np.zeros((4, 2)), Weights([0.5, 0.5]))
        assert (e.n_particles, e.n_marginals, e.dim) == (4, 2, 1)


class TestProjectBarycenter:
    @pytest.mark.parametrize(
        "lam, x, expected",
        [
            ([0.5, 0.5], [[1.0], [1.0]], 1.0),
            ([0.5, 0.5], [[1.0], [0.0]], 0.5),
            ([0.25, 0.25, 0.5], [[0.0], [1.0], [2.0]], 1.25),
        ],
    )
    def test_examples(self, lam, x, expected):
        e = CouplingEnsemble(np.array([x]), Weights(lam))
        np.testing.assert_allclose(project_barycenter(e), [[expected]], rtol=0, atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(
        x=arrays(np.float64, (5, 3, 2), elements=st.floats(-10, 10)),
        v=arrays(np.float64, (2,), elements=st.floats(-10, 10)),
    )
    def test_translation_equivariance(self, x, v):
        w = Weights([0.2, 0.3, 0.5])
        a = project_barycenter(CouplingEnsemble(x, w))
        b = project_barycenter(CouplingEnsemble(x + v, w))
        np.testing.assert_allclose(b, a + v, atol=1e-12)


def _arctan():
    return PushforwardMarginal(GaussianMarginal(0.0, 1.0), ArctanMap())


class TestScores:
    def test_gaussian_examples(self):
        g = GaussianMarginal(0.0, 1.0)
        assert marginal_score(g, [0.0]) == pytest.approx([0.0])
        assert marginal_score(g, [1.0]) == pytest.approx([-1.0])

    def test_arctan_at_zero(self):
        spec = _arctan()
        assert marginal_score(spec, [0.0])[0] == pytest.approx(0.0, abs=1e-15)
        # independent route: the closed-form log density -tan^2/2 + 2 log sec
        logrho = lambda y: -0.5 * math.tan(y) ** 2 - 2 * math.log(math.cos(y))
        fd = (logrho(1e-6) - logrho(-1e-6)) / 2e-6
        assert fd == pytest.approx(0.0, abs=1e-9)

    def test_arctan_log_density_matches_closed_form(self):
        spec = _arctan()
        y = np.linspace(-1.4, 1.4, 29)
        closed = -0.5 * np.tan(y) ** 2 - 2 * np.log(np.cos(y))
        np.testing.assert_allclose(spec.log_density(y[:, None]), closed, atol=1e-12)

    def test_out_of_support(self):
        with pytest.raises(DomainError) as exc:
            marginal_score(_arctan(), [[0.0], [2.0]], index=1)
        assert exc.value.marginal == 1 and exc.value.particle == 1

    @pytest.mark.parametrize(
        "spec, lo, hi",
        [
            (GaussianMarginal(0.3, 2.0), -5, 5),
            (_arctan(), -1.3, 1.3),
            (PushforwardMarginal(GaussianMarginal(0.5, 0.7), ArctanMap()), -1.2, 1.3),
            (PushforwardMarginal(GaussianMarginal(1.0, 2.0), AffineMap(3.0, -1.0)), -6, 6),
        ],
    )
    def test_score_matches_finite_differences(self, spec, lo, hi, rng):
        for y in rng.uniform(lo, hi, 100):
            fd = central_diff(lambda z: float(spec.log_density(z[None, :])[0]), np.array([y]))
            np.testing.assert_allclose(spec.score(np.array([[y]]))[0], fd, rtol=1e-5, atol=1e-8)

    def test_multivariate_gaussian_score(self, rng):
        spec = GaussianMarginal(rng.standard_normal(3), random_spd(rng, 3))
        for x in rng.standard_normal((100, 3)) * 2:
            fd = central_diff(lambda z: float(spec.log_density(z)), x)
            np.testing.assert_allclose(spec.score(x), fd, rtol=1e-5, atol=1e-8)

    def test_sampler_in_support(self, rng):
        spec = _arctan()
        assert np.all(spec.in_support(spec.sample(rng, 10_000)))


class TestRunConfig:
    def _cfg(self, **kw):
        base = dict(
            marginals=[GaussianMarginal(0, 1), GaussianMarginal(1, 1)],
            weights=Weights([0.5, 0.5]),
            n_particles=10,
            backend=SVGDBackendSpec(),
            schedule=FixedSchedule(1.0, 0.1),
            iterations=5,
        )
        base.update(kw)
        return RunConfig(**base)

    def test_valid(self):
        assert self._cfg().dim == 1

    @pytest.mark.parametrize(
        "kw",
        [
            {"iterations": 0},
            {"n_particles": 0},
            {"weights": Weights([0.2, 0.3, 0.5])},
            {"marginals": [GaussianMarginal(0, 1)], "weights": Weights([1.0])},
            {"marginals": [GaussianMarginal(0, 1), GaussianMarginal([0, 0], 1)]},
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            self._cfg(**kw)
