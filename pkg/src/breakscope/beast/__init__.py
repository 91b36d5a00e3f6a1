"""Bayesian structural decomposition with model averaging over knot layouts."""
from .model import (
    Hyperparams,
    ModelStructure,
    admissible_positions,
    design_matrix,
    log_marginal_likelihood,
    log_structure_prior,
    n_knot_configs,
    segment_bounds,
)
from .sampler import ChainState, rjmcmc_step, run_sampler, sample_coefficients
from .summary import (
    ExtractedChangepoint,
    PosteriorSummary,
    classify_slope_sign,
    extract_changepoints,
    trend_correlation_matrix,
)

__all__ = [
    "ChainState",
    "ExtractedChangepoint",
    "Hyperparams",
    "ModelStructure",
    "PosteriorSummary",
    "admissible_positions",
    "classify_slope_sign",
    "design_matrix",
    "extract_changepoints",
    "log_marginal_likelihood",
    "log_structure_prior",
    "n_knot_configs",
    "rjmcmc_step",
    "run_sampler",
    "sample_coefficients",
    "segment_bounds",
    "trend_correlation_matrix",
]
