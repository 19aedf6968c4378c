"""Sampling from Wasserstein barycenters by penalized multimarginal particle descent."""

__version__ = "0.1.0"

from .core import (
    CouplingEnsemble,
    DomainError,
    GaussianMarginal,
    PushforwardMarginal,
    RunConfig,
    Weights,
    marginal_score,
    project_barycenter,
)
from .dynamics import (
    AdaGradSchedule,
    DivergenceError,
    DoublingSchedule,
    FixedSchedule,
    barygd_step,
    run,
)
from .gaussian import GaussianMeasure, bures_w2, gaussian_barycenter
