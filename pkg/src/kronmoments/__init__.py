"""Moment-based fitting and exact sampling of stochastic Kronecker graphs."""

from .estimator import (
    FitFailure,
    FitResult,
    LeadingTermInfeasible,
    LeadingTransforms,
    ObjectiveSpec,
    compute_leading_transforms,
    evaluate_objective,
    fit_best,
    fit_direct,
    fit_grid,
    fit_leading,
    fit_partial,
)
from .features import (
    FeatureCounts,
    count_degree_features,
    count_features,
    count_triangles,
)
from .generator import (
    GeneratorJob,
    cell_probability,
    generate,
    generate_edges,
    generate_to_file,
)
from .graph_io import GraphParseError, SimpleGraph, choose_r, load_edge_list
from .moments import (
    DominanceExponent,
    ExpectedFeatures,
    KroneckerParams,
    brute_force_expected,
    dominance_exponent,
    expected_features,
    fold_identity_check,
    probability_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "DominanceExponent",
    "ExpectedFeatures",
    "FeatureCounts",
    "FitFailure",
    "FitResult",
    "GeneratorJob",
    "GraphParseError",
    "KroneckerParams",
    "LeadingTermInfeasible",
    "LeadingTransforms",
    "ObjectiveSpec",
    "SimpleGraph",
    "brute_force_expected",
    "cell_probability",
    "choose_r",
    "compute_leading_transforms",
    "count_degree_features",
    "count_features",
    "count_triangles",
    "dominance_exponent",
    "evaluate_objective",
    "expected_features",
    "fit_best",
    "fit_direct",
    "fit_grid",
    "fit_leading",
    "fit_partial",
    "fold_identity_check",
    "generate",
    "generate_edges",
    "generate_to_file",
    "load_edge_list",
    "probability_matrix",
    "__version__",
]
