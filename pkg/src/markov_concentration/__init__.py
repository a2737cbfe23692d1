"""Certified concentration bounds for Markov chain averages, with Monte Carlo
and transfer-operator cross-checks on the scalar AR(1) chain."""
from .bounds import (
    ConcentrationCertificate,
    Theorem,
    chernoff_fk_bound,
    find_hypercontractive_p,
    gaussian_hyperbound,
    hypercontractive_tail_cor11,
    mult_op_norm_bound,
    sample_complexity_thm10,
)
from .chain import (
    ChainSpec,
    InitialDistribution,
    Observable,
    StationaryMeasure,
    TransitionKernel,
    absolute,
    clipped_linear,
    density_ratio_l2,
    identity,
    stationary_expectation,
    stationary_measure,
)
from .sampler import (
    TailEstimate,
    TrajectoryConfig,
    empirical_average,
    estimate_tail,
    simulate_batch,
    simulate_trajectory,
    trajectory_averages,
)
from .transfer_operator import (
    GalerkinOperator,
    SpectralReport,
    feynman_kac_matrix,
    hermite_galerkin,
    hyperbound_probe,
    spectral_report,
    ulam_discretize,
)
from .transport import (
    TECheckReport,
    check_te_direct,
    check_te_dual,
    gaussian_relative_entropy,
    wasserstein1_1d,
)

__version__ = "0.1.0"
