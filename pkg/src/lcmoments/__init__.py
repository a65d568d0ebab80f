"""Deterministic moment surrogates for sums a_i X_i of unconditional,
isotropic, log-concave coordinates, with Monte-Carlo verification tooling.

The estimators work from the coefficient vector alone (plus family
structure), with no sampling: a rearrangement lower bound, a sup-norm plus
l2 upper bound, an exact-order tail program for independent coordinates,
closed forms for uniform l_q balls, and Gaussian approximation bands with
quartic corrections.  The montecarlo and harness modules supply the ground
truth the surrogates are checked against.
"""

from .coeffs import (
    CoefficientVector,
    as_coefficients,
    excluded_sq_sum,
    head_lq,
    head_sum,
    partial_lq,
    rearrange,
    tail_sq_sum,
    top_index_set,
)
from .errors import (
    InvalidArgumentError,
    MomentsError,
    OutOfRangeError,
    SolverError,
    UnboundedProgramError,
    UnsupportedFamilyError,
)
from .families import (
    Family,
    GaussianStd,
    ProductFamily,
    UniformBall,
    UniformCube,
    family_from_spec,
    isotropic_radius,
    level_set_support,
    log_density,
    marginal_cdf,
    marginal_quantile,
    product_exponential,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    ReportRow,
    coefficient_profile,
    run_experiment,
    write_report,
)
from .montecarlo import (
    EstimateRecord,
    dependent_vs_independent,
    estimate_fourth_moment,
    estimate_joint_tail,
    estimate_pnorm,
    rademacher_pnorm_exact,
    sample,
)
from .surrogates import (
    GaussianBand,
    SurrogateBundle,
    TailBoundSummary,
    ball_moment_estimate,
    bobkov_nazarov_upper,
    gaussian_band,
    gaussian_pnorm,
    gluskin_kwapien,
    gluskin_kwapien_estimate,
    hitczenko_lower,
    level_set_moment_estimate,
    surrogate_bundle,
    tail_bounds,
)
from .tails import TailFunction, exponential, power, tabulated, tail_from_spec

__version__ = "0.1.0"

__all__ = [
    "CoefficientVector",
    "as_coefficients",
    "rearrange",
    "top_index_set",
    "partial_lq",
    "head_sum",
    "head_lq",
    "tail_sq_sum",
    "excluded_sq_sum",
    "MomentsError",
    "InvalidArgumentError",
    "OutOfRangeError",
    "UnboundedProgramError",
    "UnsupportedFamilyError",
    "SolverError",
    "TailFunction",
    "exponential",
    "power",
    "tabulated",
    "tail_from_spec",
    "Family",
    "ProductFamily",
    "UniformBall",
    "GaussianStd",
    "UniformCube",
    "product_exponential",
    "isotropic_radius",
    "family_from_spec",
    "log_density",
    "level_set_support",
    "marginal_cdf",
    "marginal_quantile",
    "gaussian_pnorm",
    "hitczenko_lower",
    "bobkov_nazarov_upper",
    "gluskin_kwapien",
    "gluskin_kwapien_estimate",
    "ball_moment_estimate",
    "level_set_moment_estimate",
    "GaussianBand",
    "gaussian_band",
    "TailBoundSummary",
    "tail_bounds",
    "SurrogateBundle",
    "surrogate_bundle",
    "EstimateRecord",
    "sample",
    "estimate_pnorm",
    "estimate_fourth_moment",
    "estimate_joint_tail",
    "dependent_vs_independent",
    "rademacher_pnorm_exact",
    "ExperimentConfig",
    "ReportRow",
    "ExperimentResult",
    "coefficient_profile",
    "run_experiment",
    "write_report",
    "__version__",
]
