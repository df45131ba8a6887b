"""Fractional moments, coarse graining and the dual-peak change of measure."""
import math

from .coarse import (BlockSet, CoarseSamples, FractionalMoment, HolderTerms, block_sets,
                     coarse_grained_partition, coarse_grained_partition_decomposed,
                     coarse_log_batch, coarse_samples, fractional_moment_mc,
                     holder_decomposition_mc, holder_terms)
from .moments import (OrthogonalityReport, PairMarginalReport, conditioning_constant,
                      exact_moment_sums, pair_marginal_check, u_orthogonality_check,
                      x_discrepancy_mc, x_statistics)
from .penalty import (DualPeakProbability, DualPeakReport, PenaltyConfig, PenaltyCost,
                      detect_dual_peak, detect_dual_peak_naive, dual_peak_flags,
                      dual_peak_probability_mc, dual_peak_scaling, g_penalty, penalty_cost_mc,
                      scan_dual_peak, v_threshold)
from .tilted import (TiltedEventResult, YStatistic, b_event, penalized_block_decomposition_mc,
                     penalized_block_mc, r_alpha_quarter, tilted_event_mc, y_statistic)


def marginal_h(beta: float, A: float, gamma: float, exponent: float | None = None) -> float:
    """h_beta = exp(-A beta^exponent); the exponent defaults to -2 gamma."""
    exponent = -2 * gamma if exponent is None else exponent
    return math.exp(-A * beta ** exponent)


def marginal_ell(beta: float, A: float, gamma: float, exponent: float | None = None) -> int:
    """Block length ceil(1 / h_beta)."""
    return math.ceil(1 / marginal_h(beta, A, gamma, exponent))
