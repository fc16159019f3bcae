"""Chain diagnostics and posterior summaries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model import CorrelationFamily, canonicalize, cross_covariance
from ..sparsity import independence_matrix

__all__ = ["autocorrelation", "effective_sample_size", "ChainSummary", "chain_summaries"]


def autocorrelation(x) -> np.ndarray:
    """Sample autocorrelation at all lags (FFT, biased normalisation)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    xc = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    if acov[0] <= 0:
        return np.zeros(n)
    return acov / acov[0]


def effective_sample_size(series) -> float:
    """ESS ``N / (1 + 2 sum_k rho_k)`` with Geyer's initial monotone sequence.

    Autocorrelations are summed in adjacent pairs until a pair sum turns
    non-positive, pair sums being forced to be non-increasing.  A constant
    series has ESS ``N`` by convention, and the result is clipped to ``N``.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 10:
        raise ValueError("effective sample size needs at least 10 draws")
    if np.all(x == x[0]):
        return float(n)
    rho = autocorrelation(x)
    m = (n - 1) // 2
    pairs = rho[0:2 * m:2] + rho[1:2 * m:2]
    tau = -1.0
    prev = np.inf
    for g in pairs:
        if g <= 0:
            break
        g = min(g, prev)
        tau += 2.0 * g
        prev = g
    if tau <= 0:
        return float(n)
    return float(min(n, n / tau))


@dataclass
class ChainSummary:
    """Posterior medians and equal-tailed intervals of identifiable quantities.

    Arrays under ``median``/``lower``/``upper`` are keyed by name:
    ``cov`` (marginal covariance), ``corr`` (marginal correlation),
    ``a`` and ``phi`` (canonicalized), ``tau``, ``mu`` and ``cross:<d>`` for
    each requested distance.
    """

    n_records: int
    quantiles: tuple[float, float]
    median: dict = field(default_factory=dict)
    lower: dict = field(default_factory=dict)
    upper: dict = field(default_factory=dict)
    independence: np.ndarray | None = None
    nnz_mean: float = 0.0
    nnz_counts: dict = field(default_factory=dict)


def chain_summaries(chain, distances=(0.0,), quantiles=(0.05, 0.95),
                    family=CorrelationFamily.EXPONENTIAL) -> ChainSummary:
    """Summarise a list of :class:`ChainRecord` (or ``(record, V)`` pairs)."""
    recs = [c[0] if isinstance(c, tuple) else c for c in chain]
    if not recs:
        raise ValueError("empty chain")
    draws: dict[str, list] = {"cov": [], "corr": [], "a": [], "phi": [], "tau": [], "mu": []}
    for d in distances:
        draws[f"cross:{d:g}"] = []
    indep = []
    nnz = []
    for r in recs:
        state, phi = canonicalize(r.coreg(), r.phi)
        cov = state.effective @ state.effective.T
        sd = np.sqrt(np.diag(cov))
        draws["cov"].append(cov)
        draws["corr"].append(cov / np.outer(sd, sd))
        draws["a"].append(state.effective)
        draws["phi"].append(phi)
        draws["tau"].append(r.tau)
        draws["mu"].append(r.mu)
        for d in distances:
            draws[f"cross:{d:g}"].append(cross_covariance(state, phi, d, family))
        indep.append(independence_matrix(r.m))
        nnz.append(int(np.sum(r.m)))
    out = ChainSummary(n_records=len(recs), quantiles=tuple(quantiles))
    for key, vals in draws.items():
        arr = np.asarray(vals, dtype=float)
        out.median[key] = np.median(arr, axis=0)
        lo, hi = np.quantile(arr, quantiles, axis=0)
        out.lower[key] = lo
        out.upper[key] = hi
    out.independence = np.mean(indep, axis=0)
    out.nnz_mean = float(np.mean(nnz))
    vals, counts = np.unique(nnz, return_counts=True)
    out.nnz_counts = {int(v): int(c) for v, c in zip(vals, counts)}
    return out
