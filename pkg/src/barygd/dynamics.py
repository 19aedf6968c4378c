"""The coupled BARYGD particle iteration, parameter schedules and the run loop.

One step moves particle ``i`` of batch ``j`` by

    X[i, j] -= h * (grad_j c(X[i]) - alpha * lambda_j * v_j(X[i, j]))

where ``v_j`` is the penalization velocity supplied by a backend (SVGD or
LAWGD).  All batches are updated from the same time-``t`` state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .core import (
    CouplingEnsemble,
    GaussianMarginal,
    LAWGDBackendSpec,
    SVGDBackendSpec,
    project_barycenter,
)
from .cost import cost_gradient, empirical_cost
from .gaussian import GaussianMeasure, bures_w2, fit_gaussian, gaussian_barycenter, gaussian_sample
from .kernels import KernelSpec, median_bandwidth
from .lawgd import build_spectral_kernel, lawgd_direction
from .metrics import w2_to_reference
from .svgd import svgd_directions

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 1000.0
DEFAULT_H = 0.1
DEFAULT_DOUBLING_PERIOD = 200
DEFAULT_ALPHA_MAX = 1e12


class DivergenceError(FloatingPointError):
    """A coordinate became non-finite; carries its location and the partial run."""

    def __init__(self, particle, marginal, t, diagnostics=None):
        super().__init__(f"non-finite coordinate at particle {particle}, marginal {marginal}, iteration {t}")
        self.particle = particle
        self.marginal = marginal
        self.t = t
        self.diagnostics = diagnostics


# --------------------------------------------------------------------------
# Penalization backends
# --------------------------------------------------------------------------


class SVGDBackend:
    def __init__(self, marginals, kernel=None):
        self.marginals = tuple(marginals)
        self.kernel = kernel or KernelSpec()
        self.bandwidths = [1.0 if self.kernel.adaptive else float(self.kernel.bandwidth)] * len(self.marginals)

    def velocity(self, ensemble, t=0):
        """Ascent direction of every batch, shape ``(N, n, d)``, and the clamp count."""
        N = ensemble.n_particles
        if self.kernel.adaptive and N >= 2 and t % self.kernel.recompute_every == 0:
            self.bandwidths = [median_bandwidth(ensemble.batch(j)) for j in range(ensemble.n_marginals)]
        out = np.empty_like(ensemble.particles)
        clamps = 0
        for j, spec in enumerate(self.marginals):
            out[:, j, :], c = svgd_directions(ensemble.batch(j), spec, self.bandwidths[j], clamp=True, marginal=j)
            clamps += c
        return out, clamps


class LAWGDBackend:
    def __init__(self, marginals, grid=None):
        grid = grid or LAWGDBackendSpec()
        self.marginals = tuple(marginals)
        self.kernels = [build_spectral_kernel(m, grid.a, grid.b, grid.M, grid.K) for m in self.marginals]

    def velocity(self, ensemble, t=0):
        if ensemble.dim != 1:
            raise ValueError("the LAWGD backend supports one-dimensional marginals only")
        out = np.empty_like(ensemble.particles)
        clamps = 0
        for j, kern in enumerate(self.kernels):
            grad, c = lawgd_direction(ensemble.batch(j)[:, 0], kern)
            out[:, j, 0] = -grad
            clamps += c
        return out, clamps


def make_backend(spec, marginals):
    if isinstance(spec, SVGDBackendSpec):
        return SVGDBackend(marginals, KernelSpec(spec.bandwidth, spec.recompute_every))
    if isinstance(spec, LAWGDBackendSpec):
        return LAWGDBackend(marginals, spec)
    raise TypeError(f"unknown backend spec {spec!r}")


# --------------------------------------------------------------------------
# Single step
# --------------------------------------------------------------------------


def barygd_gradient(ensemble, backend, alpha, t=0):
    """Descent field ``grad c - alpha * lambda_j * v_j``; returns ``(field, clamps)``."""
    lam = ensemble.weights.values
    vel, clamps = backend.velocity(ensemble, t)
    grad = cost_gradient(ensemble.particles, lam)
    if alpha != 0:
        grad = grad - alpha * lam[None, :, None] * vel
    return grad, clamps


def _check_finite(x, t):
    bad = ~np.isfinite(x)
    if bad.any():
        i, j, _ = np.argwhere(bad)[0]
        raise DivergenceError(int(i), int(j), t)


def barygd_step(ensemble, backend, alpha, h, t=0):
    """One synchronous update of all batches; ``h`` may be a scalar or per-coordinate array."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if np.any(np.asarray(h) < 0):
        raise ValueError("step size must be nonnegative")
    with np.errstate(over="ignore", invalid="ignore"):
        grad, clamps = barygd_gradient(ensemble, backend, alpha, t)
        x = ensemble.particles - h * grad
    _check_finite(x, t)
    return ensemble.replace(x), clamps


# --------------------------------------------------------------------------
# Schedules
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedSchedule:
    alpha: float = DEFAULT_ALPHA
    h: float = DEFAULT_H
    kind = "fixed"

    def __post_init__(self):
        if self.alpha < 0 or not self.h > 0:
            raise ValueError(f"need alpha >= 0 and h > 0, got alpha={self.alpha}, h={self.h}")

    def to_dict(self):
        return {"kind": "fixed", "alpha": self.alpha, "h": self.h}


@dataclass(frozen=True)
class DoublingSchedule:
    """Double ``alpha`` and halve ``h`` whenever the trigger fires.

    In 1D the trigger is :func:`monotone_coupling_trigger`; in higher
    dimension it fires every ``period`` iterations.  Doubling stops once
    ``alpha`` would exceed ``alpha_max``.
    """

    alpha: float = DEFAULT_ALPHA
    h: float = DEFAULT_H
    period: int = DEFAULT_DOUBLING_PERIOD
    alpha_max: float = DEFAULT_ALPHA_MAX
    kind = "doubling"

    def __post_init__(self):
        if self.alpha < 0 or not self.h > 0:
            raise ValueError(f"need alpha >= 0 and h > 0, got alpha={self.alpha}, h={self.h}")
        if self.period < 1:
            raise ValueError("period must be >= 1")

    def to_dict(self):
        return {"kind": "doubling", "alpha0": self.alpha, "h0": self.h, "period": self.period,
                "alpha_max": self.alpha_max}


@dataclass(frozen=True)
class AdaGradSchedule:
    """Per-coordinate step ``eta / (sqrt(sum of squared gradients) + eps)``."""

    alpha: float = DEFAULT_ALPHA
    eta: float = DEFAULT_H
    eps: float = 1e-8
    accumulator: Optional[np.ndarray] = field(default=None, compare=False)
    kind = "adagrad"

    def __post_init__(self):
        if self.alpha < 0 or not self.eta > 0 or not self.eps > 0:
            raise ValueError("need alpha >= 0, eta > 0 and eps > 0")

    @property
    def h(self):
        if self.accumulator is None:
            return self.eta / self.eps
        return self.eta / (np.sqrt(self.accumulator) + self.eps)

    def to_dict(self):
        return {"kind": "adagrad", "alpha": self.alpha, "eta": self.eta, "eps": self.eps}


def schedule_update(schedule, trigger_fired=False, gradient=None):
    """Advance a schedule; returns ``(alpha, h, new_schedule)``.

    AdaGrad folds ``gradient`` into its accumulator and returns the
    per-coordinate step to use with that same gradient.
    """
    if isinstance(schedule, FixedSchedule):
        return schedule.alpha, schedule.h, schedule
    if isinstance(schedule, DoublingSchedule):
        if trigger_fired and 2 * schedule.alpha <= schedule.alpha_max:
            schedule = replace(schedule, alpha=2 * schedule.alpha, h=schedule.h / 2)
        return schedule.alpha, schedule.h, schedule
    if isinstance(schedule, AdaGradSchedule):
        if gradient is None:
            return schedule.alpha, schedule.h, schedule
        g2 = np.square(gradient)
        acc = g2 if schedule.accumulator is None else schedule.accumulator + g2
        schedule = replace(schedule, accumulator=acc)
        return schedule.alpha, schedule.h, schedule
    raise TypeError(f"unknown schedule {schedule!r}")


def monotone_coupling_trigger(ensemble):
    """True iff all 1D batches are nondecreasing functions of one another."""
    if ensemble.dim != 1:
        raise ValueError("the monotone-coupling trigger is only defined in one dimension")
    x = ensemble.particles[:, :, 0]
    n = x.shape[1]
    for j in range(n):
        order = np.argsort(x[:, j], kind="stable")
        for k in range(n):
            if k != j and np.any(np.diff(x[order, k]) < 0):
                return False
    return True


# --------------------------------------------------------------------------
# Run loop
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IterationRecord:
    t: int
    alpha: float
    h: float
    mean_cost: float
    clamps: int
    w2_ref: Optional[float] = None
    w2_moment: Optional[float] = None

    def to_dict(self):
        d = {"t": self.t, "alpha": self.alpha, "h": self.h, "mean_cost": self.mean_cost, "clamps": self.clamps}
        if self.w2_ref is not None:
            d["w2_ref"] = self.w2_ref
        if self.w2_moment is not None:
            d["w2_moment"] = self.w2_moment
        return d


@dataclass
class RunDiagnostics:
    records: List[IterationRecord]
    final: CouplingEnsemble
    snapshots: list  # (t, particles) pairs at the recording stride
    reference: Optional[GaussianMeasure] = None
    error: Optional[BaseException] = None

    @property
    def barycenter(self):
        return project_barycenter(self.final)

    def series(self, key):
        return np.array([getattr(r, key) for r in self.records], dtype=float)


def reference_barycenter(config):
    """Gaussian reference barycenter named by ``config.eval``, or ``None``."""
    ev = config.eval
    if ev is None:
        return None
    if ev.kind == "gaussian":
        return GaussianMeasure(np.asarray(ev.mean, dtype=float), np.asarray(ev.cov, dtype=float))
    if ev.kind == "gaussian-oracle":
        if not all(isinstance(m, GaussianMarginal) for m in config.marginals):
            raise ValueError("the gaussian-oracle reference needs Gaussian marginals")
        gs = [GaussianMeasure(m.mean, m.cov) for m in config.marginals]
        return gaussian_barycenter(gs, config.weights)
    raise ValueError(f"unknown eval kind {ev.kind!r}")


def initial_ensemble(config, rng):
    N, n, d = config.n_particles, len(config.marginals), config.dim
    init = config.init
    if init.kind == "from-marginals":
        x = np.stack([m.sample(rng, N) for m in config.marginals], axis=1)
    elif init.kind == "common":
        g = GaussianMeasure(np.asarray(init.mean, dtype=float), np.asarray(init.cov, dtype=float))
        if g.dim != d:
            raise ValueError(f"common initialization has dimension {g.dim}, marginals have {d}")
        z = gaussian_sample(g, N, rng=rng)
        x = np.repeat(z[:, None, :], n, axis=1)
    else:
        raise ValueError(f"unknown init policy {init.kind!r}")
    return CouplingEnsemble(x, config.weights)


def _h_summary(h):
    return float(h) if np.ndim(h) == 0 else float(np.mean(h))


def run(config, progress=None):
    """Run BARYGD as configured and return per-iteration diagnostics.

    A :class:`DivergenceError` raised mid-run carries the partial
    diagnostics in its ``diagnostics`` attribute.
    """
    rng = np.random.default_rng(config.seed)
    ensemble = initial_ensemble(config, rng)
    backend = make_backend(config.backend, config.marginals)
    ref = reference_barycenter(config)
    ref_sample = gaussian_sample(ref, config.eval.reference_size, rng=rng) if ref is not None else None

    schedule = config.schedule
    alpha, h, schedule = schedule_update(schedule)
    one_d = config.dim == 1
    records = []
    snapshots = [(0, ensemble.particles)] if config.stride else []
    diag = RunDiagnostics(records, ensemble, snapshots, ref)

    for t in range(1, config.iterations + 1):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                grad, clamps = barygd_gradient(ensemble, backend, alpha, t - 1)
                if isinstance(schedule, AdaGradSchedule):
                    alpha, h, schedule = schedule_update(schedule, gradient=grad)
                x = ensemble.particles - h * grad
                _check_finite(x, t)
                report = empirical_cost(CouplingEnsemble(x, ensemble.weights))
            if not np.isfinite(report.mean_cost):
                i = int(np.argmax(~np.isfinite(report.per_particle)))
                j = int(np.argmax(np.abs(x[i]).max(axis=-1)))
                raise DivergenceError(i, j, t)
        except DivergenceError as err:
            err.diagnostics = diag
            err.t = t
            diag.error = err
            raise
        ensemble = ensemble.replace(x)
        w2_ref = w2_moment = None
        if ref is not None and (t % config.eval.every == 0 or t == config.iterations):
            cloud = project_barycenter(ensemble)
            w2_ref = w2_to_reference(cloud, ref_sample)
            if cloud.shape[0] > cloud.shape[1]:
                try:
                    w2_moment = bures_w2(fit_gaussian(cloud), ref)
                except ValueError:
                    w2_moment = None
        records.append(
            IterationRecord(t, float(alpha), _h_summary(h), report.mean_cost, clamps, w2_ref, w2_moment)
        )
        diag.final = ensemble
        if config.stride and t % config.stride == 0:
            snapshots.append((t, ensemble.particles))
        if isinstance(schedule, DoublingSchedule):
            fired = monotone_coupling_trigger(ensemble) if one_d else t % schedule.period == 0
            alpha, h, schedule = schedule_update(schedule, fired)
        if progress is not None:
            progress(t, records[-1])
    return diag
