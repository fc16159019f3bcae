"""MCMC for the LMC: Gibbs blocks, samplers and diagnostics."""

from .diagnostics import ChainSummary, autocorrelation, chain_summaries, effective_sample_size
from .records import MODES, ChainRecord, ChainResult, SamplerConfig
from .samplers import initial_state, run, run_interweaving, run_sparse, run_standard
from .updates import (
    coreg_loglik,
    mu_posterior,
    reflect,
    rj_sweep,
    slice_sample_1d,
    tau_posterior,
    update_coreg_conjugate_given_w,
    update_coreg_slice,
    update_latent,
    update_mu_conjugate,
    update_ranges_mh,
    update_tau_conjugate,
)

__all__ = [
    "MODES",
    "ChainRecord",
    "ChainResult",
    "ChainSummary",
    "SamplerConfig",
    "autocorrelation",
    "chain_summaries",
    "coreg_loglik",
    "effective_sample_size",
    "initial_state",
    "mu_posterior",
    "reflect",
    "rj_sweep",
    "run",
    "run_interweaving",
    "run_sparse",
    "run_standard",
    "slice_sample_1d",
    "tau_posterior",
    "update_coreg_conjugate_given_w",
    "update_coreg_slice",
    "update_latent",
    "update_mu_conjugate",
    "update_ranges_mh",
    "update_tau_conjugate",
]
