"""Treelet transforms, factor-model identifiability checks, an errors-in-variables
benchmark and hierarchical feature selection."""

__version__ = "0.1.0"

from .errors import (
    DegenerateConstructionError,
    DegenerateVarianceError,
    EmptySelectionError,
    InsufficientDataError,
    InvalidDataError,
    SingularFitError,
    TreeletsError,
)
from .linalg import (
    JacobiRotation,
    as_symmetric,
    correlation_from_covariance,
    jacobi_eigenvalues,
    jacobi_rotate,
    reference_eigh,
    sample_covariance,
)
from .treelet import (
    TreeletModel,
    basis_at_level,
    build_treelet,
    inverse_transform,
    transform,
    trees_match,
)
from .factor import (
    FactorDist,
    FactorSpec,
    example2_pair,
    population_covariance,
    sample_factor_data,
)
from .eiv import (
    EivSpec,
    MethodResult,
    oracle_mse,
    oracle_predict,
    pca_regress,
    sample_eiv,
    sweep_cp,
    treelet_regress,
)
from .hier import (
    Feature,
    FeatureCache,
    FeatureDictionary,
    SelectorConfig,
    evaluate_feature,
    expand,
    ms_k,
    run_hierarchical,
)
