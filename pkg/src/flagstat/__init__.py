"""Geometry of Grassmann, Stiefel and flag manifolds, and asymptotic
inference for the flag of principal subspaces of a Gaussian covariance."""

from .estimator import PrincipalFlagEstimator
from .exceptions import (
    ConvergenceError,
    CutLocusError,
    DegenerateScalingError,
    DomainError,
    FlagstatError,
    GapError,
)
from .flag import (
    BlockScaling,
    Flag,
    FlagType,
    extrinsic_distance,
    flag_from_json,
    flag_from_orthogonal,
    flag_of_eigenspaces,
    flag_to_json,
    group_action,
    k_discrepancy,
    k_discrepancy_flags,
    orthogonal_from_flag,
    standard_flag,
)
from .grassmann import grass_dist, grass_exp, grass_log, in_cut_locus
from .inference import (
    CovModel,
    PivotalReport,
    confidence_region_contains,
    dof,
    flag_hypothesis_test,
    pivotal_statistic,
    sample_covariance,
)
from .stiefel import geodesic_decomposition, holonomy

__version__ = "0.1.0"
