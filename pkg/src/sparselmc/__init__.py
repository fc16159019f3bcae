"""Linear model of coregionalization with linear-in-p likelihoods.

The subpackages cover the matrix-form density and its dense oracle
(:mod:`~sparselmc.density`), exact simulation, kriging, mask admissibility
and reversible-jump moves (:mod:`~sparselmc.sparsity`), and the Gibbs,
sparse and interweaving samplers (:mod:`~sparselmc.mcmc`).
"""

from .density import (
    SpatialCorrSet,
    build_corr_set,
    complete_loglik_centered,
    complete_loglik_whitened,
    kron_sum_inverse,
    kron_sum_logdet,
    lmc_logpdf_matrix,
    lmc_logpdf_naive,
)
from .model import (
    CoregionalizationState,
    CorrelationFamily,
    Locations,
    ObservedData,
    PriorSpec,
    canonicalize,
    cross_covariance,
    marginal_covariance,
)
from .predict import conditional_lmc, posterior_predict, predict_draw
from .simulate import make_study_scenario, sample_lmc, sample_observed
from .sparsity import independence_indicator, is_admissible, mask_log_prior, propose_rj

__version__ = "0.1.0"

__all__ = [
    "CoregionalizationState",
    "CorrelationFamily",
    "Locations",
    "ObservedData",
    "PriorSpec",
    "SpatialCorrSet",
    "build_corr_set",
    "canonicalize",
    "complete_loglik_centered",
    "complete_loglik_whitened",
    "conditional_lmc",
    "cross_covariance",
    "independence_indicator",
    "is_admissible",
    "kron_sum_inverse",
    "kron_sum_logdet",
    "lmc_logpdf_matrix",
    "lmc_logpdf_naive",
    "make_study_scenario",
    "marginal_covariance",
    "mask_log_prior",
    "posterior_predict",
    "predict_draw",
    "propose_rj",
    "sample_lmc",
    "sample_observed",
]
