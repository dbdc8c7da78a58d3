"""Numerical verification of entropy power and Fisher information
inequalities for dependent bivariate variables."""

from ._kernels import backend_name
from .density import (
    Density1D,
    Density2D,
    FamilySpec,
    Grid1D,
    GridSpec,
    build_density,
    list_families,
    marginalize,
    product_density,
    quadrature_1d,
    quadrature_2d,
    sum_density,
    tabulated_from_csv,
    tabulated_from_values,
)
from .entropy import (
    EntropyReport,
    conditional_entropies,
    entropy_1d,
    entropy_2d,
    entropy_report,
)
from .errors import (
    ConfigError,
    EpiLabError,
    ExcessiveMaskLossError,
    GridTooSmallError,
    InvalidParametersError,
    KernelUnderresolvedError,
    NonFiniteInputError,
    StepSizeInsufficientError,
)
from .flow import (
    FlowState,
    NoiseCovariance,
    STrajectory,
    check_de_bruijn,
    condition1_along_flow,
    density_at,
    entropy_gap_derivative,
    gaussian_smooth,
    run_cepi_flow,
)
from .gaussian_oracle import (
    GaussianSpec,
    oracle_after_noise,
    oracle_entropy,
    oracle_fisher,
    oracle_flow,
    oracle_m_moment,
    oracle_s,
)
from .inequalities import (
    check_cepi,
    check_condition1,
    check_condition_takano,
    check_epi,
    check_mixing_sufficient,
    check_mixing_threshold,
    check_prop4,
    check_stam,
)
from .results import CheckResult
from .score import (
    FisherReport,
    PsiMixing,
    ScoreField,
    fisher_report,
    m_identity_check,
    m_statistic_moment,
    psi_mixing,
    score_1d,
    score_2d,
    score_of_sum_conditional,
    score_of_sum_direct,
    sum_score_consistency,
)

__version__ = "0.1.0"
