"""Exact simulation of LMC fields and noisy observations.

Random streams: ``sample_lmc`` spawns one child ``SeedSequence`` per base
process ``j`` from a single integer drawn off the parent generator, so each
row's normal draws are independent of how rows are scheduled.
"""

from __future__ import annotations

import numpy as np

from .density import SpatialCorrSet, build_corr_set
from .model import CoregionalizationState, CorrelationFamily, Locations, ObservedData

__all__ = [
    "row_streams",
    "sample_lmc",
    "sample_observed",
    "study_ranges",
    "make_study_scenario",
    "full_study_matrix",
    "simulate_fields",
]


def row_streams(rng, p: int) -> list[np.random.Generator]:
    """``p`` independent generators derived from one draw of ``rng``."""
    seed = int(rng.integers(2**63))
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(p)]


def sample_lmc(state: CoregionalizationState, corr: SpatialCorrSet, rng) -> np.ndarray:
    """Draw ``V = sum_j a_j z_j B_j^T`` with ``B_j`` the Cholesky factor of ``R_j``."""
    if state.p != corr.p:
        raise ValueError("dimension mismatch between A and R")
    streams = row_streams(rng, corr.p)
    w = np.empty((corr.p, corr.n))
    for j, g in enumerate(streams):
        w[j] = corr.chol[j] @ g.standard_normal(corr.n)
    return state.effective @ w


def sample_observed(v, tau, mu=None, avail=None, rng=None, placeholder: float = 0.0) -> ObservedData:
    """Add noise: ``y_ji = v_ji + mu_j + sqrt(tau_j) eps`` on available cells."""
    v = np.asarray(v, dtype=float)
    p, n = v.shape
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    mu = np.zeros(p) if mu is None else np.asarray(mu, dtype=float)
    avail = np.ones((p, n), dtype=bool) if avail is None else np.asarray(avail, dtype=bool)
    rng = np.random.default_rng() if rng is None else rng
    eps = rng.standard_normal((p, n))
    y = v + mu[:, None] + np.sqrt(tau)[:, None] * eps
    return ObservedData(np.where(avail, y, placeholder), avail)


def study_ranges(p: int, low: float = 5.0, high: float = 25.0) -> np.ndarray:
    """``p`` ranges equally spaced on the log scale over ``[low, high]``.

    A single range sits at the lower endpoint.
    """
    if p == 1:
        return np.array([low])
    return np.geomspace(low, high, p)


def full_study_matrix(p: int) -> np.ndarray:
    """All entries ``1/sqrt(p)``, negative strictly above the diagonal."""
    a = np.full((p, p), 1.0 / np.sqrt(p))
    a[np.triu_indices(p, 1)] *= -1.0
    return a


def make_study_scenario(kind: str, p: int, n: int, rng, locs: Locations | None = None,
                        tau: float = 0.25):
    """Simulation-study design with full or diagonal coregionalization.

    Returns
    -------
    locs : Locations
        ``n`` uniform points on the unit square (or ``locs`` when given).
    state : CoregionalizationState
    phi : ndarray
    tau : ndarray
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    if kind == "full":
        state = CoregionalizationState(full_study_matrix(p))
    elif kind == "diagonal":
        state = CoregionalizationState.identity(p)
    else:
        raise ValueError(f"unknown scenario kind {kind!r} (expected 'full' or 'diagonal')")
    if locs is None:
        locs = Locations.uniform(n, rng)
    return locs, state, study_ranges(p), np.full(p, float(tau))


def simulate_fields(state, phi, locs: Locations, rng, extra: Locations | None = None,
                    family=CorrelationFamily.EXPONENTIAL):
    """Joint draw at ``locs`` and, optionally, held-out ``extra`` locations.

    Returns ``(v_obs, v_extra)``; ``v_extra`` is ``None`` without ``extra``.
    """
    allocs = locs if extra is None else locs.union(extra)
    corr = build_corr_set(allocs, phi, family)
    v = sample_lmc(state, corr, rng)
    if extra is None:
        return v, None
    return v[:, :locs.n], v[:, locs.n:]
