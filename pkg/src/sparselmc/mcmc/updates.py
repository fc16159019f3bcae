"""Individual Gibbs blocks.

Conventions: the latent ``v`` (p x n) includes the component means, so the
observations are centred at ``v`` and ``v - mu 1^T`` is LMC distributed.
``gram`` always refers to the stack ``G_j = (V - mu 1^T) R_j^{-1} (V - mu 1^T)^T``.

RNG consumption per block is documented on each function so that runs are
reproducible for a fixed seed.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dpotrf, dpotri

from ..density import SpatialCorrSet, gram_matrices, quadratic_from_gram
from ..model import CoregionalizationState, CorrelationFamily, ObservedData, PriorSpec
from ..sparsity import is_admissible, propose_rj

__all__ = [
    "slice_sample_1d",
    "reflect",
    "coreg_loglik",
    "update_latent",
    "update_coreg_slice",
    "update_coreg_conjugate_given_w",
    "rj_sweep",
    "update_ranges_mh",
    "update_tau_conjugate",
    "update_mu_conjugate",
]


def slice_sample_1d(logf, x0: float, width: float, max_steps: int, rng, logf0=None):
    """Univariate slice sampling with stepping out and shrinkage.

    At most ``max_steps`` steps of size ``width`` are taken in total while
    stepping out, split at random between the two sides.

    RNG use: one exponential, then three uniforms, then one uniform per
    shrinkage trial.

    Returns
    -------
    x1 : float
    logf1 : float
        Log density at the new point.
    """
    if logf0 is None:
        logf0 = logf(x0)
    level = logf0 - rng.standard_exponential()
    left = x0 - width * rng.random()
    right = left + width
    j = int(max_steps * rng.random())
    k = max_steps - 1 - j
    while j > 0 and level < logf(left):
        left -= width
        j -= 1
    while k > 0 and level < logf(right):
        right += width
        k -= 1
    while True:
        x1 = left + (right - left) * rng.random()
        f1 = logf(x1)
        if level < f1:
            return x1, f1
        if x1 < x0:
            left = x1
        else:
            right = x1
        if right - left < 1e-300:  # pragma: no cover - only with a broken density
            return x0, logf0


def reflect(x, lo: float, hi: float):
    """Fold ``x`` back into ``[lo, hi]`` by mirror reflection at the bounds."""
    span = hi - lo
    y = np.mod(np.asarray(x, dtype=float) - lo, 2.0 * span)
    return lo + np.where(y > span, 2.0 * span - y, y)


def coreg_loglik(state: CoregionalizationState, gram: np.ndarray, n: int) -> float:
    """The ``A``-dependent part of the LMC log-density, from cached Gram matrices."""
    return -0.5 * quadratic_from_gram(state.inv, gram) - n * state.logabsdet


def update_latent(v, y: ObservedData, state: CoregionalizationState, corr: SpatialCorrSet,
                  tau, mu, rng) -> np.ndarray:
    """One sweep over locations drawing each column ``v(s_i)`` from its
    p-variate full conditional.

    The site precision is ``sum_j [R_j^{-1}]_ii b_j^T b_j + D^{-1} diag(avail_i)``;
    unavailable cells simply drop out of the data term.

    RNG use: one (n, p) block of standard normals.
    """
    p, n = v.shape
    b = state.inv
    tau = np.asarray(tau, dtype=float)
    mu = np.asarray(mu, dtype=float)
    r_inv = corr.r_inv
    diag = np.einsum("jii->ji", r_inv)
    prec = np.einsum("ji,jk,jl->ikl", diag, b, b)
    data_prec = y.avail.T / tau[None, :]
    prec[:, np.arange(p), np.arange(p)] += data_prec
    cov = np.linalg.inv(prec)
    cov = 0.5 * (cov + np.swapaxes(cov, 1, 2))
    fac = np.linalg.cholesky(cov)
    data_term = (np.where(y.avail, y.y, 0.0) - mu[:, None]).T * data_prec
    data_term = np.where(y.avail.T, data_term, 0.0)
    z = rng.standard_normal((n, p))
    w = b @ (v - mu[:, None])
    out = np.empty((p, n))
    bt = b.T
    for i in range(n):
        h = np.einsum("jn,jn->j", r_inv[:, i, :], w) - diag[:, i] * w[:, i]
        rhs = data_term[i] - bt @ h
        col = cov[i] @ rhs + fac[i] @ z[i]
        out[:, i] = col
        w[:, i] = b @ col
    return out + mu[:, None]


class _EntryDensity:
    """Log conditional density of one entry ``a_ij`` along a coordinate line.

    With ``B = A^{-1}``, moving ``a_ij`` by ``delta`` is a rank-one change,
    so ``det`` scales by ``1 + delta B_ji`` and each row of the new inverse is
    ``B_k - c u_k w`` with ``u = B[:, i]``, ``w = B[j]`` and
    ``c = delta / (1 + delta B_ji)``.  The quadratic form then collapses to
    three scalars and every evaluation costs O(1).
    """

    __slots__ = ("x0", "bji", "alpha", "beta", "gamma", "n", "inv_var", "logdet0")

    def __init__(self, state, gram, n, i, j, a_sd):
        b = state.inv
        u = b[:, i]
        w = b[j]
        bg = np.einsum("ki,kil->kl", b, gram)
        self.alpha = float(np.einsum("kl,kl->", bg, b))
        self.beta = float(u @ (bg @ w))
        self.gamma = float((u * u) @ np.einsum("l,klm,m->k", w, gram, w))
        self.x0 = float(state.effective[i, j])
        self.bji = float(b[j, i])
        self.n = n
        self.inv_var = 1.0 / (a_sd * a_sd)
        self.logdet0 = state.logabsdet

    def __call__(self, x: float) -> float:
        delta = x - self.x0
        s = 1.0 + delta * self.bji
        if s == 0.0:
            return -math.inf
        c = delta / s
        q = self.alpha - 2.0 * c * self.beta + c * c * self.gamma
        return -0.5 * x * x * self.inv_var - 0.5 * q - self.n * (self.logdet0 + math.log(abs(s)))


def update_coreg_slice(state: CoregionalizationState, gram: np.ndarray, n: int,
                       prior: PriorSpec, rng, width: float = 1.0,
                       max_steps: int = 10) -> CoregionalizationState:
    """Slice-sample every free entry of ``A`` in row-major order given ``V``.

    ``gram`` holds ``V R_j^{-1} V^T`` (for the centred ``V``); the observation
    term does not involve ``A`` once ``V`` is fixed.

    RNG use: that of :func:`slice_sample_1d` for each free cell in turn.
    """
    p = state.p
    for i in range(p):
        for j in range(p):
            if not state.mask[i, j]:
                continue
            dens = _EntryDensity(state, gram, n, i, j, prior.a_sd)
            x1, _ = slice_sample_1d(dens, dens.x0, width, max_steps, rng)
            if x1 != dens.x0:
                state = state.with_entry(i, j, x1)
    return state


def update_coreg_conjugate_given_w(state: CoregionalizationState, w, y: ObservedData, tau, mu,
                                   prior: PriorSpec, rng) -> CoregionalizationState:
    """Exact Gaussian draw of the free entries of ``A`` given whitened ``W``.

    Given ``W`` the rows of ``A`` decouple into independent Bayesian linear
    regressions of ``y_j - mu_j`` on the rows of ``W`` selected by the mask,
    with noise variance ``tau_j`` over available cells and N(0, a_sd^2) priors.

    RNG use: one standard normal per free cell, row by row.
    """
    w = np.asarray(w, dtype=float)
    tau = np.asarray(tau, dtype=float)
    mu = np.asarray(mu, dtype=float)
    p = state.p
    a = np.zeros((p, p))
    inv_var = 1.0 / prior.a_sd ** 2
    for j in range(p):
        free = np.flatnonzero(state.mask[j])
        cols = y.avail[j]
        x = w[free][:, cols].T
        resp = y.y[j, cols] - mu[j]
        prec = x.T @ x / tau[j] + inv_var * np.eye(free.size)
        chol = np.linalg.cholesky(prec)
        mean = solve_triangular(chol, solve_triangular(chol, x.T @ resp / tau[j], lower=True),
                                lower=True, trans="T")
        z = rng.standard_normal(free.size)
        a[j, free] = mean + solve_triangular(chol, z, lower=True, trans="T")
    try:
        return CoregionalizationState(a, state.mask)
    except ValueError:  # pragma: no cover - probability zero
        return state


def rj_sweep(state: CoregionalizationState, gram: np.ndarray, n: int, prior: PriorSpec,
             rng, moves: int, stats: dict | None = None) -> CoregionalizationState:
    """``moves`` reversible-jump birth/death proposals on the mask.

    RNG use per move: those of :func:`~sparselmc.sparsity.propose_rj`, then
    one exponential for the accept test (skipped on auto-reject).
    """
    pi = prior.pi(state.p)
    cur = coreg_loglik(state, gram, n)
    for _ in range(moves):
        prop = propose_rj(state, pi, prior.a_sd, rng)
        if stats is not None:
            stats["rj_proposed"] = stats.get("rj_proposed", 0) + 1
        if prop.auto_reject:
            continue
        new = coreg_loglik(prop.state, gram, n)
        log_ratio = new - cur + prop.log_adjust
        if log_ratio >= 0 or -rng.standard_exponential() < log_ratio:
            if not is_admissible(prop.state.mask):  # pragma: no cover - guarded by propose_rj
                raise AssertionError("accepted an inadmissible mask")
            state, cur = prop.state, new
            if stats is not None:
                stats["rj_accepted"] = stats.get("rj_accepted", 0) + 1
    return state


def _chol_logdet_quad(r: np.ndarray, w_row: np.ndarray):
    c, info = dpotrf(r, lower=1, clean=1, overwrite_a=0)
    if info != 0:
        return None
    z = solve_triangular(c, w_row, lower=True, check_finite=False)
    return c, 2.0 * np.sum(np.log(np.diag(c))), float(z @ z)


def _inverse_from_chol(c):
    inv, info = dpotri(c, lower=1)
    if info != 0:  # pragma: no cover
        raise np.linalg.LinAlgError("inversion from Cholesky factor failed")
    return np.tril(inv) + np.tril(inv, -1).T


def update_ranges_mh(phi, state: CoregionalizationState, v, mu, dist: np.ndarray,
                     corr: SpatialCorrSet, prior: PriorSpec, rng, step: float = 1.0,
                     block: str = "joint", family=None, jitter: float = 0.0):
    """Random-walk Metropolis on the ranges with reflection into the prior support.

    The acceptance ratio only involves the p terms ``w_j R_j^{-1} w_j^T`` and
    ``log det R_j`` (``w = A^{-1}(V - mu 1^T)``); a proposed matrix that fails
    to factorise is rejected.  ``block='joint'`` moves all ranges at once,
    ``'component'`` sweeps them one at a time.

    RNG use: joint -- p normals then one exponential; component -- per j one
    normal then one exponential.

    Returns
    -------
    phi : ndarray
    corr : SpatialCorrSet
        The input object itself when nothing was accepted.
    """
    family = CorrelationFamily.EXPONENTIAL if family is None else family
    phi = np.asarray(phi, dtype=float)
    p = phi.size
    w = state.inv @ (np.asarray(v, dtype=float) - np.asarray(mu, dtype=float)[:, None])
    quad_cur = np.einsum("jn,jnm,jm->j", w, corr.r_inv, w)
    eye = np.eye(dist.shape[0]) if jitter else None

    def corr_of(ph):
        r = family(ph, dist)
        return r + jitter * eye if jitter else r

    if block == "joint":
        prop = reflect(phi + step * rng.standard_normal(p), prior.phi_min, prior.phi_max)
        if np.array_equal(prop, phi):
            # always accepted; keep consuming the same draws
            rng.standard_exponential()
            return phi, corr
        r_new = np.empty_like(corr.r)
        facs = []
        log_ratio = 0.0
        for j in range(p):
            r_new[j] = corr_of(prop[j])
            res = _chol_logdet_quad(r_new[j], w[j])
            if res is None:
                rng.standard_exponential()
                return phi, corr
            facs.append(res)
            log_ratio += -0.5 * (res[2] - quad_cur[j]) - 0.5 * (res[1] - corr.log_det[j])
        if log_ratio >= 0 or -rng.standard_exponential() < log_ratio:
            chol = np.stack([f[0] for f in facs])
            r_inv = np.stack([_inverse_from_chol(f[0]) for f in facs])
            log_det = np.array([f[1] for f in facs])
            return prop, SpatialCorrSet(r=r_new, chol=chol, r_inv=r_inv, log_det=log_det, phi=prop)
        return phi, corr

    r, chol, r_inv, log_det = corr.r, corr.chol, corr.r_inv, corr.log_det
    changed = False
    phi = phi.copy()
    for j in range(p):
        prop_j = float(reflect(phi[j] + step * rng.standard_normal(), prior.phi_min, prior.phi_max))
        rj = corr_of(prop_j)
        res = _chol_logdet_quad(rj, w[j])
        if res is None:
            rng.standard_exponential()
            continue
        log_ratio = -0.5 * (res[2] - quad_cur[j]) - 0.5 * (res[1] - log_det[j])
        if log_ratio >= 0 or -rng.standard_exponential() < log_ratio:
            if not changed:
                r, chol, r_inv, log_det = r.copy(), chol.copy(), r_inv.copy(), log_det.copy()
                changed = True
            r[j], chol[j], r_inv[j], log_det[j] = rj, res[0], _inverse_from_chol(res[0]), res[1]
            phi[j] = prop_j
    if not changed:
        return phi, corr
    return phi, SpatialCorrSet(r=r, chol=chol, r_inv=r_inv, log_det=log_det, phi=phi.copy())


def update_tau_conjugate(prior: PriorSpec, v, y: ObservedData, rng) -> np.ndarray:
    """Inverse-gamma draws for the noise variances from available cells.

    ``tau_j ~ IG(shape + n_j/2, scale + sum_avail (y_ji - v_ji)^2 / 2)``.

    RNG use: p gamma variates.
    """
    shape, scale = tau_posterior(prior, v, y)
    return scale / rng.gamma(shape)


def tau_posterior(prior: PriorSpec, v, y: ObservedData):
    """Inverse-gamma ``(shape, scale)`` arrays of the noise-variance full conditional."""
    v = np.asarray(v, dtype=float)
    resid = np.where(y.avail, v - np.where(y.avail, y.y, 0.0), 0.0)
    counts = y.avail.sum(axis=1)
    return prior.tau_shape + 0.5 * counts, prior.tau_scale + 0.5 * np.sum(resid ** 2, axis=1)


def update_mu_conjugate(prior: PriorSpec, v, state: CoregionalizationState,
                        corr: SpatialCorrSet, rng) -> np.ndarray:
    """Joint Gaussian draw of the component means given the latent field.

    Precision ``sum_j (1^T R_j^{-1} 1) b_j^T b_j + I / mu_var``.

    RNG use: p standard normals.
    """
    prec, rhs = mu_posterior(prior, v, state, corr)
    chol = np.linalg.cholesky(prec)
    mean = solve_triangular(chol, solve_triangular(chol, rhs, lower=True), lower=True, trans="T")
    z = rng.standard_normal(mean.size)
    return mean + solve_triangular(chol, z, lower=True, trans="T")


def mu_posterior(prior: PriorSpec, v, state: CoregionalizationState, corr: SpatialCorrSet):
    """Precision matrix and linear term of the mean's Gaussian full conditional."""
    v = np.asarray(v, dtype=float)
    b = state.inv
    r1 = corr.r_inv.sum(axis=2)  # R_j^{-1} 1, shape (p, n)
    s = r1.sum(axis=1)
    prec = np.einsum("j,jk,jl->kl", s, b, b) + np.eye(b.shape[0]) / prior.mu_var
    h = np.einsum("jn,jn->j", b @ v, r1)
    return prec, b.T @ h


def refresh_gram(v, mu, corr: SpatialCorrSet) -> np.ndarray:
    return gram_matrices(np.asarray(v) - np.asarray(mu)[:, None], corr)
