"""Conditional distributions and kriging for the LMC.

Conditioning on ``V_obs`` keeps the LMC structure: the conditional law at the
prediction locations is an LMC with the same coregionalization matrix and
correlation matrices ``R_pred - R_po R_obs^{-1} R_op``, centred at
``sum_j a_j b_j V_obs R_obs^{-1} R_op``.  Everything is therefore done per
base process in the whitened coordinates ``W = A^{-1} V``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .model import CoregionalizationState, CorrelationFamily, Locations

__all__ = [
    "PartitionedCorr",
    "build_partition",
    "conditional_lmc",
    "predict_draw",
    "PredictionSummary",
    "posterior_predict",
    "rmse",
    "posterior_rmse",
]


class PartitionedCorr:
    """Per-process blocks of ``R_j`` over observed and prediction locations.

    Kriging weights ``R_obs^{-1} R_op`` and conditional correlations are
    computed at construction.
    """

    def __init__(self, r_obs, r_op, r_pred):
        self.r_obs = np.asarray(r_obs, dtype=float)
        self.r_op = np.asarray(r_op, dtype=float)
        self.r_pred = np.asarray(r_pred, dtype=float)
        p, n_o, n_m = self.r_op.shape
        self.weights = np.empty((p, n_o, n_m))
        self.cond_corr = np.empty((p, n_m, n_m))
        for j in range(p):
            try:
                cf = cho_factor(self.r_obs[j], lower=True, check_finite=False)
            except np.linalg.LinAlgError:
                raise ValueError(
                    f"observed correlation block R_obs of process {j + 1} is singular "
                    "(duplicated locations?)") from None
            self.weights[j] = cho_solve(cf, self.r_op[j], check_finite=False)
            cc = self.r_pred[j] - self.r_op[j].T @ self.weights[j]
            self.cond_corr[j] = 0.5 * (cc + cc.T)
        self._factors = None

    @property
    def p(self) -> int:
        return self.r_op.shape[0]

    @property
    def n_obs(self) -> int:
        return self.r_op.shape[1]

    @property
    def n_pred(self) -> int:
        return self.r_op.shape[2]

    def factors(self) -> np.ndarray:
        """Square roots ``F_j F_j^T = cond_corr_j`` (exact zero when degenerate)."""
        if self._factors is None:
            f = np.empty_like(self.cond_corr)
            for j in range(self.p):
                try:
                    f[j] = np.linalg.cholesky(self.cond_corr[j])
                except np.linalg.LinAlgError:
                    lam, vec = np.linalg.eigh(self.cond_corr[j])
                    f[j] = vec * np.sqrt(np.clip(lam, 0.0, None))
            self._factors = f
        return self._factors


def build_partition(locs_obs: Locations, locs_new: Locations, phi,
                    family=CorrelationFamily.EXPONENTIAL, jitter: float = 0.0,
                    dists=None) -> PartitionedCorr:
    """Evaluate one correlation function over the union and split the blocks.

    ``dists`` optionally supplies the three distance blocks
    ``(d_obs, d_op, d_pred)`` for reuse across range values.
    """
    family = CorrelationFamily.parse(family)
    phi = np.atleast_1d(np.asarray(phi, dtype=float))[:, None, None]
    if dists is None:
        dists = (locs_obs.distances(), locs_obs.distances(locs_new), locs_new.distances())
    d_obs, d_op, d_pred = dists
    r_obs = family(phi, d_obs[None])
    if jitter:
        r_obs = r_obs + jitter * np.eye(d_obs.shape[0])[None]
    return PartitionedCorr(r_obs, family(phi, d_op[None]), family(phi, d_pred[None]))


def conditional_lmc(state: CoregionalizationState, part: PartitionedCorr, v_obs):
    """Mean (p x n_m) and conditional correlation matrices of ``V_pred | V_obs``."""
    v_obs = np.asarray(v_obs, dtype=float)
    if v_obs.shape != (part.p, part.n_obs):
        raise ValueError(f"V_obs has shape {v_obs.shape}, expected {(part.p, part.n_obs)}")
    w_obs = state.inv @ v_obs
    w_mean = np.einsum("jn,jnm->jm", w_obs, part.weights)
    return state.effective @ w_mean, [c.copy() for c in part.cond_corr]


def predict_draw(state: CoregionalizationState, part: PartitionedCorr, v_obs, rng) -> np.ndarray:
    """One draw of ``V_pred | V_obs``: whiten, condition each row, colour."""
    v_obs = np.asarray(v_obs, dtype=float)
    if v_obs.shape != (part.p, part.n_obs):
        raise ValueError(f"V_obs has shape {v_obs.shape}, expected {(part.p, part.n_obs)}")
    w_obs = state.inv @ v_obs
    w_pred = np.einsum("jn,jnm->jm", w_obs, part.weights)
    f = part.factors()
    z = rng.standard_normal((part.p, part.n_pred))
    w_pred += np.einsum("jmk,jk->jm", f, z)
    return state.effective @ w_pred


@dataclass
class PredictionSummary:
    """Per-sample predictions and their pointwise summaries.

    ``samples`` has shape (S, p, n_new); ``mean``, ``lower`` and ``upper``
    have shape (p, n_new).
    """

    samples: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    quantiles: tuple[float, float]


def posterior_predict(chain, v_chain, locs_obs: Locations, locs_new: Locations,
                      family=CorrelationFamily.EXPONENTIAL, jitter: float = 0.0,
                      draws: bool = False, rng=None,
                      quantiles=(0.05, 0.95)) -> PredictionSummary:
    """Kriging predictions for every posterior sample.

    Each record contributes ``mu + E[V_new - mu | V_obs - mu]`` (or a
    conditional draw when ``draws`` is set).  Partitions are cached on the
    exact bits of ``phi`` since rejected range moves repeat values.
    """
    chain = list(chain)
    v_chain = list(v_chain)
    if not chain:
        raise ValueError("empty chain")
    if len(chain) != len(v_chain):
        raise ValueError(f"{len(chain)} chain records but {len(v_chain)} latent draws")
    if draws and rng is None:
        raise ValueError("conditional draws need an rng")
    dists = (locs_obs.distances(), locs_obs.distances(locs_new), locs_new.distances())
    cache: dict[bytes, PartitionedCorr] = {}
    p = np.asarray(chain[0].phi).size
    out = np.empty((len(chain), p, locs_new.n))
    for s, (rec, v) in enumerate(zip(chain, v_chain)):
        phi = np.asarray(rec.phi, dtype=float)
        key = phi.tobytes()
        part = cache.get(key)
        if part is None:
            part = cache[key] = build_partition(locs_obs, locs_new, phi, family, jitter, dists)
        state = rec.coreg()
        mu = np.asarray(rec.mu, dtype=float)[:, None]
        centred = np.asarray(v, dtype=float) - mu
        if draws:
            out[s] = predict_draw(state, part, centred, rng) + mu
        else:
            out[s] = conditional_lmc(state, part, centred)[0] + mu
    lo, hi = np.quantile(out, quantiles, axis=0)
    return PredictionSummary(out, out.mean(axis=0), lo, hi, tuple(quantiles))


def rmse(pred, truth) -> float:
    """Root mean square error over all entries."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def posterior_rmse(samples, truth) -> float:
    """RMSE over locations and components, averaged across posterior samples."""
    samples = np.asarray(samples, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if samples.shape[1:] != truth.shape:
        raise ValueError(f"shape mismatch: {samples.shape[1:]} vs {truth.shape}")
    per = np.sqrt(np.mean((samples - truth[None]) ** 2, axis=(1, 2)))
    return float(per.mean())
