"""LMC log-densities.

The density of a p x n matrix ``V`` whose vectorisation (columns stacked,
i.e. location-major) has covariance ``sum_j R_j kron a_j a_j^T`` is evaluated
without ever forming an np x np matrix:

    log p(V) = -1/2 sum_j b_j V R_j^{-1} V^T b_j^T - (np/2) log 2pi
               - n log|det A| - 1/2 sum_j log det R_j

where ``b_j`` is the j-th row of ``A^{-1}``.  Given the factorised ``R_j`` the
cost is linear in p.  :func:`lmc_logpdf_naive` builds the dense covariance and
is kept as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.linalg.lapack import dpotrf, dpotri

from .model import CoregionalizationState, CorrelationFamily, Locations, ObservedData

LOG_2PI = float(np.log(2.0 * np.pi))
DENSE_GUARD = 4000

__all__ = [
    "SpatialCorrSet",
    "CholeskyError",
    "build_corr_set",
    "factorize",
    "lmc_logpdf_matrix",
    "lmc_logpdf_naive",
    "dense_lmc_covariance",
    "kron_sum_inverse",
    "kron_sum_logdet",
    "gram_matrices",
    "quadratic_from_gram",
    "complete_loglik_centered",
    "complete_loglik_whitened",
    "observation_loglik",
]


class CholeskyError(np.linalg.LinAlgError):
    """A correlation matrix failed to factorise."""


@dataclass(frozen=True)
class SpatialCorrSet:
    """Stacked correlation matrices ``R_j`` and their factorisations.

    Attributes
    ----------
    r, chol, r_inv : (p, n, n) ndarray
        Correlation matrices, lower Cholesky factors and inverses.
    log_det : (p,) ndarray
    phi : (p,) ndarray
        Range parameters the set was built from.
    """

    r: np.ndarray
    chol: np.ndarray
    r_inv: np.ndarray
    log_det: np.ndarray
    phi: np.ndarray

    @property
    def p(self) -> int:
        return self.r.shape[0]

    @property
    def n(self) -> int:
        return self.r.shape[1]


def _factor_one(r: np.ndarray, j: int):
    c, info = dpotrf(r, lower=1, clean=1, overwrite_a=0)
    if info != 0:
        raise CholeskyError(
            f"correlation matrix R_{j + 1} is not positive definite "
            f"(LAPACK info={info}); consider adding jitter"
        )
    inv, info = dpotri(c, lower=1)
    if info != 0:
        raise CholeskyError(f"inversion of R_{j + 1} failed (info={info})")
    inv = np.tril(inv) + np.tril(inv, -1).T
    logdet = 2.0 * np.sum(np.log(np.diag(c)))
    return c, inv, logdet


def factorize(r: np.ndarray, phi) -> SpatialCorrSet:
    """Factorise a stack of correlation matrices ``r`` of shape (p, n, n)."""
    r = np.asarray(r, dtype=float)
    p, n, _ = r.shape
    chol = np.empty_like(r)
    r_inv = np.empty_like(r)
    log_det = np.empty(p)
    for j in range(p):
        chol[j], r_inv[j], log_det[j] = _factor_one(r[j], j)
    return SpatialCorrSet(r=r, chol=chol, r_inv=r_inv, log_det=log_det,
                          phi=np.array(phi, dtype=float))


def build_corr_set(locs: Locations, phi, family=CorrelationFamily.EXPONENTIAL,
                   jitter: float = 0.0, dist: np.ndarray | None = None) -> SpatialCorrSet:
    """Correlation matrices ``R_j[i, k] = rho(phi_j, |s_i - s_k|) + jitter 1{i=k}``.

    ``dist`` may be passed to reuse a precomputed distance matrix.

    Raises
    ------
    CholeskyError
        Naming the offending component when some ``R_j`` is not positive
        definite.
    """
    if jitter < 0:
        raise ValueError("jitter must be non-negative")
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    if np.any(phi <= 0):
        raise ValueError("range parameters must be positive")
    d = locs.distances() if dist is None else dist
    r = CorrelationFamily.parse(family)(phi[:, None, None], d[None, :, :])
    if jitter:
        r = r + jitter * np.eye(d.shape[0])[None]
    return factorize(r, phi)


def _check_shapes(v: np.ndarray, state: CoregionalizationState, corr: SpatialCorrSet):
    if v.ndim != 2:
        raise ValueError("latent field must be a p x n matrix")
    p, n = v.shape
    if state.p != p or corr.p != p:
        raise ValueError(f"dimension mismatch: V has p={p}, A has p={state.p}, R has p={corr.p}")
    if corr.n != n:
        raise ValueError(f"dimension mismatch: V has n={n}, R_j are {corr.n} x {corr.n}")


def lmc_logpdf_matrix(v, state: CoregionalizationState, corr: SpatialCorrSet) -> float:
    """Matrix-form LMC log-density of ``v`` (p x n)."""
    v = np.asarray(v, dtype=float)
    _check_shapes(v, state, corr)
    p, n = v.shape
    u = state.inv @ v
    quad = 0.0
    for j in range(p):
        z = solve_triangular(corr.chol[j], u[j], lower=True, check_finite=False)
        quad += z @ z
    return float(-0.5 * quad - 0.5 * n * p * LOG_2PI - n * state.logabsdet
                 - 0.5 * corr.log_det.sum())


def dense_lmc_covariance(state: CoregionalizationState, corr: SpatialCorrSet) -> np.ndarray:
    """Dense ``sum_j R_j kron a_j a_j^T`` of ``vec(V)`` (columns stacked)."""
    p, n = corr.p, corr.n
    if n * p > DENSE_GUARD:
        raise ValueError(f"np={n * p} exceeds the dense size guard ({DENSE_GUARD})")
    a = state.effective
    cov = np.zeros((n * p, n * p))
    for j in range(p):
        cov += np.kron(corr.r[j], np.outer(a[:, j], a[:, j]))
    return cov


def lmc_logpdf_naive(v, state: CoregionalizationState, corr: SpatialCorrSet) -> float:
    """Log-density through the dense np x np covariance (Cholesky route)."""
    v = np.asarray(v, dtype=float)
    _check_shapes(v, state, corr)
    cov = dense_lmc_covariance(state, corr)
    x = v.ravel(order="F")
    c, low = cho_factor(cov, lower=True, check_finite=False)
    quad = x @ cho_solve((c, low), x, check_finite=False)
    logdet = 2.0 * np.sum(np.log(np.diag(c)))
    return float(-0.5 * (quad + logdet + x.size * LOG_2PI))


def kron_sum_inverse(state: CoregionalizationState, corr: SpatialCorrSet) -> np.ndarray:
    """Precision ``sum_j R_j^{-1} kron b_j^T b_j`` of ``vec(V)``."""
    p, n = corr.p, corr.n
    if n * p > DENSE_GUARD:
        raise ValueError(f"np={n * p} exceeds the dense size guard ({DENSE_GUARD})")
    b = state.inv
    out = np.zeros((n * p, n * p))
    for j in range(p):
        out += np.kron(corr.r_inv[j], np.outer(b[j], b[j]))
    return out


def kron_sum_logdet(state: CoregionalizationState, corr: SpatialCorrSet) -> float:
    """``log det`` of the LMC covariance: ``2n log|det A| + sum_j log det R_j``."""
    return float(2.0 * corr.n * state.logabsdet + corr.log_det.sum())


def gram_matrices(v, corr: SpatialCorrSet) -> np.ndarray:
    """Stack of ``G_j = V R_j^{-1} V^T``, shape (p, p, p) indexed ``[j]``."""
    v = np.asarray(v, dtype=float)
    vr = np.einsum("in,jnm->jim", v, corr.r_inv)
    return np.einsum("jim,km->jik", vr, v)


def quadratic_from_gram(inv: np.ndarray, gram: np.ndarray) -> float:
    """``sum_j b_j G_j b_j^T`` for rows ``b_j`` of ``inv``."""
    return float(np.einsum("ji,jik,jk->", inv, gram, inv))


def observation_loglik(y: ObservedData, v: np.ndarray, tau) -> float:
    """``log N(y | v, diag(tau))`` summed over available cells only."""
    tau = np.asarray(tau, dtype=float)
    if y.y.shape != v.shape:
        raise ValueError(f"dimension mismatch: Y is {y.y.shape}, V is {v.shape}")
    if tau.shape != (v.shape[0],):
        raise ValueError("tau must have one entry per component")
    resid = np.where(y.avail, v - np.where(y.avail, y.y, 0.0), 0.0)
    counts = y.avail.sum(axis=1)
    return float(-0.5 * np.sum(resid ** 2 / tau[:, None])
                 - 0.5 * np.sum(counts * np.log(tau))
                 - 0.5 * counts.sum() * LOG_2PI)


def complete_loglik_centered(y: ObservedData, v, state, corr, tau, mu=None) -> float:
    """Joint log-density of (Y, V) with ``V - mu 1^T`` LMC distributed.

    ``v`` includes the mean; ``y`` is centred at ``v``.
    """
    v = np.asarray(v, dtype=float)
    mu = np.zeros(v.shape[0]) if mu is None else np.asarray(mu, dtype=float)
    return lmc_logpdf_matrix(v - mu[:, None], state, corr) + observation_loglik(y, v, tau)


def complete_loglik_whitened(y: ObservedData, w, state, corr, tau, mu=None) -> float:
    """Joint log-density of (Y, W) with independent rows ``w_j ~ N(0, R_j)``.

    The observations are centred at ``(A o M) W + mu 1^T``.
    """
    w = np.asarray(w, dtype=float)
    _check_shapes(w, state, corr)
    p, n = w.shape
    mu = np.zeros(p) if mu is None else np.asarray(mu, dtype=float)
    quad = 0.0
    for j in range(p):
        z = solve_triangular(corr.chol[j], w[j], lower=True, check_finite=False)
        quad += z @ z
    lat = -0.5 * quad - 0.5 * n * p * LOG_2PI - 0.5 * corr.log_det.sum()
    v = state.effective @ w + mu[:, None]
    return float(lat + observation_loglik(y, v, tau))
