"""Volumes of sections and projections of l_p sums of normed spaces."""

from .exact import (
    ExactValue,
    diagonal_section_limit,
    direct_sum_volume,
    exact_volume,
    lp_ball_volume,
    lp_power_volume,
    mixed_sum_volume,
    power_volume,
    block_counterexample_check,
)
from .gaussian import (
    PSDSamplerSpec,
    det_identity_p2_check,
    det_schur_estimate,
    laplace_estimate,
    negative_moment_estimate,
    norm_moment_estimate,
    slab_laplace_estimate,
    slab_sweep,
)
from .lewis import LewisPosition, LewisResult, LewisSingularityError, isotropy_residual, lewis_solve, pushforward
from .meanwidth import mean_width_estimate, meanwidth_schur_suite
from .projections import (
    MembershipConfig,
    decomposition_identity_check,
    loomis_whitney_check,
    onesym_projection_check,
    projection_lower_bound_check,
    projection_membership,
    projection_volume,
    subspace_projection_volume,
)
from .sections import (
    block_section_volume,
    invariance_ratio_check,
    question_probe,
    schur_section_suite,
    section_volume,
)
from .spaces import (
    BlockHyperplane,
    DirectSumL1,
    DiscreteMeasure,
    Euclidean,
    LinearImage,
    LpDiscrete,
    LpPower,
    LqBall,
    Subspace,
    hyperplane_basis,
    majorization_chain,
    majorizes,
    norm_eval,
    parse_space,
    resolve_theta,
)
from .streams import Estimate, MCConfig

__version__ = "0.1.0"
