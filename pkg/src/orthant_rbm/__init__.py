"""Absorption of reflected Brownian motion at the apex of the orthant.

Assumption checks and classification of the reflection matrix, the
exponential decay vector, an Euler scheme with a per-step Skorokhod
projection, Monte Carlo estimators and PDE residual checks.
"""

__version__ = "0.1.0"

from .decay import (
    Classification,
    DecayVector,
    Normalization,
    Verdict,
    classify,
    compute_decay_vector,
    predicted_absorption,
)
from .estimators import ExponentialAbsorption, MonteCarloAbsorption
from .matrix import check_assumptions, is_completely_s, is_s_matrix, lemma2_certificate
from .model import FacetSpec, ModelError, ModelSpec, load_model, validate_model
from .montecarlo import EstimateReport, SweepReport, estimate_absorption, wilson_interval
from .pde import absorption_pde_residuals, dual_pde_residuals, fd_generator_check
from .simulator import SimConfig, run_batch, simulate_trajectory

__all__ = [
    "__version__",
    "Classification",
    "DecayVector",
    "EstimateReport",
    "ExponentialAbsorption",
    "FacetSpec",
    "ModelError",
    "ModelSpec",
    "MonteCarloAbsorption",
    "Normalization",
    "SimConfig",
    "SweepReport",
    "Verdict",
    "absorption_pde_residuals",
    "check_assumptions",
    "classify",
    "compute_decay_vector",
    "dual_pde_residuals",
    "estimate_absorption",
    "fd_generator_check",
    "is_completely_s",
    "is_s_matrix",
    "lemma2_certificate",
    "load_model",
    "predicted_absorption",
    "run_batch",
    "simulate_trajectory",
    "validate_model",
    "wilson_interval",
]
