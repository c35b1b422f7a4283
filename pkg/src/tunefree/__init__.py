"""Tuning-parameter-free estimators for sparse regression and matrix denoising."""

from tunefree.norms import (
    NormKind,
    NormPair,
    l1_kind,
    l2_kind,
    sup_kind,
    nuclear_kind,
    spectral_kind,
    design_kind,
    norm_eval,
    dual_norm_eval,
    project_ball,
)
from tunefree.solvers import (
    SolverSettings,
    SolverError,
    BasisPursuitResult,
    basis_pursuit,
    l1_constrained_ls,
    nuclear_constrained,
    column_space_projection,
    svd,
)
from tunefree.sim import (
    Scenario,
    SimReport,
    TABLE1_ROWS,
    cv_lasso,
    gen_design,
    gen_response,
    prediction_error,
    run_matrix_scenario,
    run_scenario,
    selection_metrics,
)
from tunefree.estimators import (
    GaussianSampler,
    RegressionFit,
    MatrixFit,
    RiskBound,
    estimate_sigma,
    abstract_fit,
    regression_fit,
    matrix_fit,
    regression_risk_bound,
    matrix_risk_bound,
)

__version__ = "0.1.0"
