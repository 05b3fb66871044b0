"""Beta-divergence nonnegative matrix factorization.

Multiplicative-update solvers in two flavors -- the classic block
scheme that rebuilds the model product at every factor update, and a
joint scheme that freezes an anchor pair per outer iteration and reuses
its cached product across sub-iterations -- together with the auxiliary
bound they descend, convergence diagnostics, an operation-count model,
matrix IO and a benchmark harness.
"""

from .bench import BenchReport, format_report, run_bench, summarize
from .core import (
    BetaParam,
    DataMatrix,
    DivergenceDomainError,
    FactorPair,
    beta_divergence,
    default_kappa,
    elementwise_power,
    gamma_exponent,
    guarded_divide,
    objective,
)
from .diagnostics import (
    KktResiduals,
    SavingsReport,
    kkt_residuals,
    match_columns,
    predicted_savings,
)
from .majorizer import (
    MajorizerAnchor,
    aux_partial_gradient_fd,
    aux_value,
    split_divergence,
)
from .matrixio import load_matrix, save_factors, save_trace
from .solver import (
    Algorithm,
    FitResult,
    SolverConfig,
    Termination,
    fit,
    init_factors,
    normalize,
    run_bmm,
    run_jmm,
    should_stop,
    synthetic_low_rank,
)
from .updates import (
    OpCounter,
    UpdateKind,
    bmm_update_h,
    bmm_update_w,
    chi1,
    chi2,
    fast_path_update,
    jmm_update_h,
    jmm_update_w,
)
from .verify import run_property_suites

__version__ = "0.1.0"

__all__ = [
    "Algorithm",
    "BenchReport",
    "BetaParam",
    "DataMatrix",
    "DivergenceDomainError",
    "FactorPair",
    "FitResult",
    "KktResiduals",
    "MajorizerAnchor",
    "OpCounter",
    "SavingsReport",
    "SolverConfig",
    "Termination",
    "UpdateKind",
    "aux_partial_gradient_fd",
    "aux_value",
    "beta_divergence",
    "bmm_update_h",
    "bmm_update_w",
    "chi1",
    "chi2",
    "default_kappa",
    "elementwise_power",
    "fast_path_update",
    "fit",
    "format_report",
    "gamma_exponent",
    "guarded_divide",
    "init_factors",
    "jmm_update_h",
    "jmm_update_w",
    "kkt_residuals",
    "load_matrix",
    "match_columns",
    "normalize",
    "objective",
    "predicted_savings",
    "run_bench",
    "run_bmm",
    "run_jmm",
    "run_property_suites",
    "save_factors",
    "save_trace",
    "should_stop",
    "split_divergence",
    "summarize",
    "synthetic_low_rank",
]
