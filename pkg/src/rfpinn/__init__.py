"""Random-feature networks for PINN solves of elliptic Dirichlet problems.

Modules: ``activation`` (Spline34 / SigDiff / TanhDiff), ``sampling``
(hidden-weight priors), ``representation`` (Monte-Carlo approximants of
Gaussian targets), ``pinn`` (problems and least-squares assembly), ``solvers``
(ridge and projected gradient descent) and ``experiments`` (sweeps and CSV).
"""

from ._accel import backend_name
from .activation import ActivationKind, eval_sigma, sigma_hat
from .pinn import assemble, poisson1d, sample_collocation
from .sampling import CompactPrior, FeatureBank, HeavyTailPrior, sample
from .solvers import PGDConfig, pgd, ridge, theorem3_schedule, theorem4_schedule

__version__ = "0.1.0"

__all__ = [
    "ActivationKind",
    "CompactPrior",
    "FeatureBank",
    "HeavyTailPrior",
    "PGDConfig",
    "assemble",
    "backend_name",
    "eval_sigma",
    "pgd",
    "poisson1d",
    "ridge",
    "sample",
    "sample_collocation",
    "sigma_hat",
    "theorem3_schedule",
    "theorem4_schedule",
]
