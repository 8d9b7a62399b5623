"""Quasi-probability representations of bipartite quantum states.

Every density operator can be expanded over product states with real — but
possibly negative — weights, and the sign structure of the best such
expansion witnesses entanglement: separable states admit an all-positive
expansion, entangled states do not.  This package builds the expansions,
enumerates the product states that support them (solutions of the
separability eigenvalue equations), optimizes the weights, and cross-checks
the results with independent oracles.
"""

from .errors import (
    DimensionMismatch,
    EigensolverFailure,
    EmptySolutionSet,
    EntQuasiError,
    InconsistentSystem,
    MalformedInput,
    NonConvergence,
    NotHermitian,
    NotOrthogonal,
    NotOrthogonalSelection,
    NotPSD,
    NotUnitTrace,
    UnsupportedDims,
)
from .qp_optimize import (
    AnalysisReport,
    GramSystem,
    analyze,
    build_gram_system,
    optimize_weights,
    orthogonal_subset,
    residual_split,
    solve_quasi,
    weights_to_distribution,
)
from .reconstruct import (
    PureExpansion,
    SchmidtForm,
    interference_expansion,
    pure_to_quasi,
    reconstruct_quasi,
    schmidt_decompose,
    spectral_decompose,
)
from .sep_eigen import (
    Family,
    SepEigenSolution,
    SolutionSet,
    SolverConfig,
    sep_iterate,
    sep_norm,
    solve_sep_eigen,
)
from .state_model import (
    DensityOperator,
    Dims,
    HermitianOperator,
    Ket,
    ProductState,
    QuasiDistribution,
    assemble,
    load_decomposition,
    load_operator,
    load_state,
    partial_collapse,
    reduced_a,
    reduced_b,
    validate_density,
)
from .verify_oracle import (
    PptReport,
    grid_sep_eigen,
    partial_transpose,
    ppt_check,
    verify_decomposition,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "DensityOperator",
    "DimensionMismatch",
    "Dims",
    "EigensolverFailure",
    "EmptySolutionSet",
    "EntQuasiError",
    "Family",
    "GramSystem",
    "HermitianOperator",
    "InconsistentSystem",
    "Ket",
    "MalformedInput",
    "NonConvergence",
    "NotHermitian",
    "NotOrthogonal",
    "NotOrthogonalSelection",
    "NotPSD",
    "NotUnitTrace",
    "PptReport",
    "ProductState",
    "PureExpansion",
    "QuasiDistribution",
    "SchmidtForm",
    "SepEigenSolution",
    "SolutionSet",
    "SolverConfig",
    "UnsupportedDims",
    "analyze",
    "assemble",
    "build_gram_system",
    "grid_sep_eigen",
    "interference_expansion",
    "load_decomposition",
    "load_operator",
    "load_state",
    "optimize_weights",
    "orthogonal_subset",
    "partial_collapse",
    "partial_transpose",
    "ppt_check",
    "pure_to_quasi",
    "reconstruct_quasi",
    "reduced_a",
    "reduced_b",
    "residual_split",
    "schmidt_decompose",
    "sep_iterate",
    "sep_norm",
    "solve_quasi",
    "solve_sep_eigen",
    "spectral_decompose",
    "validate_density",
    "verify_decomposition",
    "weights_to_distribution",
]
