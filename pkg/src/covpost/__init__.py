"""Covariance posteriors in multi-response Gaussian regression under
scale-mixed inverse-Wishart (DSIW) and matrix-F priors.

The package provides the Gibbs samplers for both prior families, the
regression sufficient statistics feeding them, experiment plans that map
posterior-contraction and fixed-ratio inconsistency sweeps over parallel
replicates, and a Monte Carlo verification suite for the random-matrix
facts those experiments illustrate.
"""

from .errors import (
    CovpostError,
    DegreesOfFreedomTooSmallError,
    DimensionMismatchError,
    EmptyChainError,
    NonFiniteDensityError,
    NotPositiveDefiniteError,
    ParameterOutOfRangeError,
    PlanError,
    PreconditionError,
    SingularDesignError,
    UnknownPresetError,
)
from .experiments import (
    ExperimentPlan,
    MetricRow,
    QSchedule,
    Sigma0Spec,
    generate_iid_data,
    generate_regression_data,
    make_sigma0,
    read_metrics_csv,
    run_consistency,
    run_inconsistency,
    write_metrics_csv,
)
from .gibbs import (
    ChainConfig,
    PosteriorSamples,
    effective_sample_size,
    gibbs_dsiw,
    gibbs_matrixf,
    posterior_mean_sigma,
    tail_probability,
)
from .linalg import (
    PDMatrix,
    cholesky,
    eigvals_sym,
    logdet_pd,
    schur_det_identity_check,
    solve_pd,
    spectral_norm,
)
from .model import (
    Dataset,
    SufficientStats,
    TrueParams,
    compute_stats,
    dataset_from_csv,
    dataset_to_csv,
    loglik,
    woodbury_check,
)
from .priors import (
    DsiwPrior,
    MatrixFPrior,
    MixingDensity,
    check_tail_monotone,
    log_mixing_density,
    preset,
)
from .rng import RngStream, derive_stream_id
from .sampling import (
    inverse_wishart,
    matrix_normal,
    slice_sample,
    std_normal_matrix,
    wishart,
)
from .verify import CheckReport, run_default_suite

__version__ = "0.1.0"
