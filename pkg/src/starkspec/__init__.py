"""Numerical diagnostics for perturbed Stark operators -u'' - x u + q(x) u = lam u.

Modules
-------
potentials   perturbation families, presets and hypothesis checks
transforms   Liouville map to the variable xi = (2/3) x^(3/2)
prufer       amplitude/phase integration, diagnostic integrals, control expressions
oscillatory  oscillatory tails, windowed Fourier transforms, maximal function
subordinacy  direct solutions, L2 growth, norm ratios, spectral surveys
cli          command-line front end (``starkspec``)
"""

from ._version import __version__
from .potentials import PRESETS, PotentialSpec, evaluate, parse_preset, preset
from .prufer import (
    PruferState,
    PruferTrajectory,
    SpectralVerdict,
    convergence_verdict,
    initial_state,
    integral6_partial,
    integrate_prufer,
)
from .subordinacy import SurveyConfig, SurveyReport, solve_original, spectral_survey
from .transforms import C_LIOUVILLE, effective_potential, x_of_xi, xi_of_x

__all__ = [
    "__version__",
    "PRESETS",
    "PotentialSpec",
    "evaluate",
    "parse_preset",
    "preset",
    "PruferState",
    "PruferTrajectory",
    "SpectralVerdict",
    "convergence_verdict",
    "initial_state",
    "integral6_partial",
    "integrate_prufer",
    "SurveyConfig",
    "SurveyReport",
    "solve_original",
    "spectral_survey",
    "C_LIOUVILLE",
    "effective_potential",
    "x_of_xi",
    "xi_of_x",
]
