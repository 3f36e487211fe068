"""Optimal classification under demographic parity by Wasserstein barycenters."""

from .barycenter import GroupedScores, barycenter_distribution, barycenter_quantile, solve_gamma_star
from .dual import DualProblem, DualSolution, check_foc, classify_dual
from .dual import solve as solve_dual
from .empirical import WeightedSample1D, ks_distance, pushforward, w2
from .errors import (
    DegenerateDistributionError,
    DomainError,
    DualSolverError,
    FairnessPreconditionError,
    InvalidMeasureError,
    NoFeasibleClassifierError,
    OutsideDomainError,
    ZeroTotalVariationError,
)
from .fair_score import FairScoreModel, classify_half, classify_rank, dp_gap, fit, group_thresholds, transform
from .lin_frac import LFMeasure, ConfusionStats, optimal_utility, preset, solve_threshold, utility, validate
from .unaware import DiscreteJoint2, hahn_reduce, solve_unaware, total_variation

__version__ = "0.1.0"
