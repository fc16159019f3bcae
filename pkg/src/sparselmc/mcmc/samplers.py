"""Gibbs samplers for the (sparse) LMC with a latent field.

Every iteration performs, in order:

1. a column-by-column sweep of the latent ``V``;
2. the coregionalization block, which depends on the mode:

   * ``standard``: slice updates of every entry of ``A`` given ``V``;
   * ``sparse``: ``p`` reversible-jump birth/death moves on the mask, then
     slice updates of the non-zero entries;
   * ``interweave_*``: slice updates given ``V`` (``centered``), an exact
     Gaussian draw given ``W = A^{-1}(V - mu)`` followed by ``V = A W + mu``
     (``whitened``), or both in that order (``both``);

3. a Metropolis move on the ranges;
4. conjugate inverse-gamma draws of the noise variances;
5. (with ``with_mean``) a Gaussian draw of the component means.

All randomness flows from one ``numpy.random.Generator`` seeded with
``config.seed`` and consumed in exactly this order.
"""

from __future__ import annotations

import numpy as np

from ..density import build_corr_set, complete_loglik_centered, gram_matrices
from ..model import CoregionalizationState, Locations, ObservedData, PriorSpec
from ..sparsity import is_admissible
from .records import ChainRecord, ChainResult, SamplerConfig
from .updates import (
    refresh_gram,
    rj_sweep,
    update_coreg_conjugate_given_w,
    update_coreg_slice,
    update_latent,
    update_mu_conjugate,
    update_ranges_mh,
    update_tau_conjugate,
)

__all__ = ["initial_state", "run", "run_standard", "run_sparse", "run_interweaving"]


def initial_state(data: ObservedData, prior: PriorSpec, config: SamplerConfig):
    """Starting values derived from the available data only.

    ``A`` starts diagonal with half of each row's empirical variance, the
    remaining half going to ``tau``; ranges are geometrically spread inside
    the prior support; missing cells of ``V`` are filled with row means.
    """
    p = data.p
    means = data.row_means()
    cnt = data.avail.sum(axis=1)
    dev = np.where(data.avail, data.y - means[:, None], 0.0)
    var = np.where(cnt > 1, (dev ** 2).sum(axis=1) / np.maximum(cnt - 1, 1), 1.0)
    var = np.maximum(var, 1e-6)
    state = CoregionalizationState(np.diag(np.sqrt(var / 2)), np.ones((p, p), dtype=bool))
    q = (np.arange(p) + 0.5) / p
    phi = np.exp(np.log(prior.phi_min) + q * (np.log(prior.phi_max) - np.log(prior.phi_min)))
    mu = means.copy() if config.with_mean else np.zeros(p)
    v = np.where(data.avail, data.y, means[:, None])
    return {"state": state, "phi": phi, "tau": var / 2, "mu": mu, "v": v}


def _check_inputs(data: ObservedData, locs: Locations):
    if data.n != locs.n:
        raise ValueError(f"data has {data.n} locations but {locs.n} coordinates were given")


def run(data: ObservedData, locs: Locations, prior: PriorSpec | None = None,
        config: SamplerConfig | None = None, init: dict | None = None,
        callback=None) -> ChainResult:
    """Run the sampler selected by ``config.mode``.

    Parameters
    ----------
    init : dict, optional
        Overrides for the starting values (keys ``state``, ``phi``, ``tau``,
        ``mu``, ``v``).
    callback : callable, optional
        Called as ``callback(record, v)`` for each retained draw, in order.

    Returns
    -------
    ChainResult
        The retained ``(ChainRecord, V)`` pairs; ``stats`` holds acceptance
        counts.
    """
    prior = PriorSpec() if prior is None else prior
    config = SamplerConfig() if config is None else config
    _check_inputs(data, locs)
    p, n = data.p, data.n
    start = initial_state(data, prior, config)
    if init:
        unknown = set(init) - set(start)
        if unknown:
            raise ValueError(f"unknown initial values {sorted(unknown)}")
        start.update(init)
    state: CoregionalizationState = start["state"]
    if config.mode in ("standard",) or config.mode.startswith("interweave"):
        if not state.mask.all():
            raise ValueError(f"mode {config.mode!r} requires a full mask")
    phi = np.array(start["phi"], dtype=float)
    tau = np.array(start["tau"], dtype=float)
    mu = np.array(start["mu"], dtype=float)
    v = np.array(start["v"], dtype=float)
    if v.shape != (p, n) or phi.shape != (p,) or tau.shape != (p,) or mu.shape != (p,):
        raise ValueError("initial values have inconsistent shapes")

    rng = np.random.default_rng(config.seed)
    dist = locs.distances()
    corr = build_corr_set(locs, phi, config.family, config.jitter, dist=dist)
    gram = refresh_gram(v, mu, corr)
    moves = p if config.rj_moves_per_iter is None else config.rj_moves_per_iter
    stats = {"iterations": 0, "phi_accepted": 0, "rj_proposed": 0, "rj_accepted": 0}
    mode = config.mode
    use_mean = config.with_mean and config.update_mu
    out = ChainResult(stats=stats)

    def check(where):
        if config.check_cache:
            fresh = gram_matrices(v - mu[:, None], corr)
            if not np.allclose(fresh, gram, rtol=1e-8, atol=1e-8):
                raise AssertionError(f"stale Gram cache after {where}")
            if not is_admissible(state.mask):
                raise AssertionError(f"inadmissible mask after {where}")

    for it in range(config.iters):
        if config.update_latent:
            v = update_latent(v, data, state, corr, tau, mu, rng)
            gram = refresh_gram(v, mu, corr)
            check("latent")
        if config.update_coreg:
            if mode == "sparse" and config.update_mask:
                state = rj_sweep(state, gram, n, prior, rng, moves, stats)
                check("rj")
            if mode in ("standard", "sparse", "interweave_centered", "interweave_both"):
                state = update_coreg_slice(state, gram, n, prior, rng,
                                           config.slice_width, config.slice_max_steps)
                check("slice")
            if mode in ("interweave_whitened", "interweave_both"):
                w = state.inv @ (v - mu[:, None])
                state = update_coreg_conjugate_given_w(state, w, data, tau, mu, prior, rng)
                v = state.effective @ w + mu[:, None]
                gram = refresh_gram(v, mu, corr)
                check("whitened A")
        if config.update_ranges:
            phi_new, corr_new = update_ranges_mh(phi, state, v, mu, dist, corr, prior, rng,
                                                 config.mh_step, config.phi_block,
                                                 config.family, config.jitter)
            if corr_new is not corr:
                stats["phi_accepted"] += 1
                phi, corr = phi_new, corr_new
                gram = refresh_gram(v, mu, corr)
                check("ranges")
        if config.update_tau:
            tau = update_tau_conjugate(prior, v, data, rng)
        if use_mean:
            mu = update_mu_conjugate(prior, v, state, corr, rng)
            gram = refresh_gram(v, mu, corr)
            check("mean")
        stats["iterations"] = it + 1
        if it >= config.burnin:
            rec = ChainRecord(a=state.a.copy(), m=state.mask.copy(), phi=phi.copy(),
                              tau=tau.copy(), mu=mu.copy(),
                              loglik=complete_loglik_centered(data, v, state, corr, tau, mu))
            out.append((rec, v.copy()))
            if callback is not None:
                callback(rec, out[-1][1])
    return out


def run_standard(data, locs, prior=None, config=None, **kw) -> ChainResult:
    """Full-mask LMC sampler."""
    config = SamplerConfig() if config is None else config
    return run(data, locs, prior, config.replace(mode="standard"), **kw)


def run_sparse(data, locs, prior=None, config=None, **kw) -> ChainResult:
    """Sparse LMC sampler with reversible-jump moves on the mask."""
    config = SamplerConfig() if config is None else config
    return run(data, locs, prior, config.replace(mode="sparse"), **kw)


def run_interweaving(data, locs, prior=None, config=None, variant: str | None = None,
                     **kw) -> ChainResult:
    """Interweaving sampler; ``variant`` is 'centered', 'whitened' or 'both'.

    Without ``variant`` the config's interweave mode is kept (default both).
    """
    config = SamplerConfig() if config is None else config
    if variant is not None:
        mode = f"interweave_{variant}"
    elif config.mode.startswith("interweave"):
        mode = config.mode
    else:
        mode = "interweave_both"
    return run(data, locs, prior, config.replace(mode=mode), **kw)
