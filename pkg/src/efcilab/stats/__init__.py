"""Self-contained OLS/ANOVA engine: encoding, fitting, inference, diagnostics."""

from .analysis import (
    AnovaRow,
    AnovaTable,
    ModelCandidate,
    ModelSelection,
    PairwiseMatrix,
    ScreeningRow,
    anova_partial_eta2,
    pairwise_comparison,
    screen_variables,
    select_model_aic,
)
from .design import (
    CATEGORICAL_VARS,
    DesignError,
    DesignMatrix,
    Formula,
    RunRecord,
    encode_design,
    parse_formula,
)
from .distributions import (
    f_pvalue,
    inv_norm_cdf,
    log_gamma,
    regularized_incomplete_beta,
    student_t_pvalue,
)
from .linalg import RankDeficientError, jacobi_eigenvalues, least_squares
from .regression import (
    DiagnosticsBundle,
    GramDiagnostic,
    RegressionFit,
    diagnostics,
    gram_min_eigenvalue,
    ols_fit,
    standardized_residuals,
)

__all__ = [
    "AnovaRow",
    "AnovaTable",
    "CATEGORICAL_VARS",
    "DesignError",
    "DesignMatrix",
    "DiagnosticsBundle",
    "Formula",
    "GramDiagnostic",
    "ModelCandidate",
    "ModelSelection",
    "PairwiseMatrix",
    "RankDeficientError",
    "RegressionFit",
    "RunRecord",
    "ScreeningRow",
    "anova_partial_eta2",
    "diagnostics",
    "encode_design",
    "f_pvalue",
    "gram_min_eigenvalue",
    "inv_norm_cdf",
    "jacobi_eigenvalues",
    "least_squares",
    "log_gamma",
    "ols_fit",
    "pairwise_comparison",
    "parse_formula",
    "regularized_incomplete_beta",
    "screen_variables",
    "select_model_aic",
    "standardized_residuals",
    "student_t_pvalue",
]
