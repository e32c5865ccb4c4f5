"""Optimal composite mediator: closed-form MaxIE, MaxCor and the cosine test."""
__version__ = "0.1.0"

from .analysis import Analysis, analyse, analyse_stats
from .core_stats import (
    Dataset,
    MediationSummary,
    PathCoefficients,
    SufficientStats,
    center_and_standardise,
    composite_summary,
    compute_sufficient_stats,
    evaluate_composite,
    path_coefficients,
)
from .dual import dual_path_vectors, dual_statistics, maxie_fit_dual, select_regime
from .inference import (
    cosine_test,
    iut_test,
    noncentrality_dual,
    noncentrality_primal,
    population_angle,
    power_noncentral_t,
)
from .maxcor import maxcor_fit, mediation_index
from .primal import MediatorFit, PathGeometry, alignment, maxie_fit_primal, path_vectors

__all__ = [
    "Analysis",
    "analyse",
    "analyse_stats",
    "Dataset",
    "MediationSummary",
    "PathCoefficients",
    "SufficientStats",
    "center_and_standardise",
    "composite_summary",
    "compute_sufficient_stats",
    "evaluate_composite",
    "path_coefficients",
    "dual_path_vectors",
    "dual_statistics",
    "maxie_fit_dual",
    "select_regime",
    "cosine_test",
    "iut_test",
    "noncentrality_dual",
    "noncentrality_primal",
    "population_angle",
    "power_noncentral_t",
    "maxcor_fit",
    "mediation_index",
    "MediatorFit",
    "PathGeometry",
    "alignment",
    "maxie_fit_primal",
    "path_vectors",
]
