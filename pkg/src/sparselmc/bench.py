"""Timing harness contrasting matrix-form and dense likelihood evaluation.

For each ``(n, p)`` a fixed random instance is built, both evaluators are
checked to agree to ``1e-8`` (relative to ``1 + |naive|``), and only then
timed.  Correlation factorizations are built once beforehand and excluded
from the matrix-form timings; the dense method pays for its own ``np x np``
factorization on every call, which is the point of the comparison.
"""

from __future__ import annotations

import time

import numpy as np

from .density import DENSE_GUARD, build_corr_set, lmc_logpdf_matrix, lmc_logpdf_naive
from .model import CoregionalizationState, Locations
from .simulate import sample_lmc

__all__ = ["BENCH_COLUMNS", "bench_instance", "time_evals", "run_bench"]

BENCH_COLUMNS = ("n", "p", "method", "seconds", "evals", "note")
AGREE_TOL = 1e-8


def bench_instance(n: int, p: int, rng):
    """Random well-conditioned ``(V, state, corr)`` at size ``(n, p)``."""
    locs = Locations.uniform(n, rng)
    a = rng.normal(size=(p, p)) / np.sqrt(p) + np.eye(p)
    state = CoregionalizationState(a)
    phi = rng.uniform(5.0, 25.0, size=p)
    corr = build_corr_set(locs, phi)
    return sample_lmc(state, corr, rng), state, corr


def time_evals(fn, evals: int, repeats: int) -> float:
    """Median over ``repeats`` of the wall time of ``evals`` calls to ``fn``."""
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(evals):
            fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def run_bench(ns=(50, 100, 200), ps=(2, 4, 8, 16), evals: int = 20, repeats: int = 5,
              guard: int = DENSE_GUARD, seed: int = 0, methods=("matrix", "naive")) -> list[dict]:
    """Benchmark rows with keys :data:`BENCH_COLUMNS`.

    The dense method is skipped (row with empty ``seconds`` and a ``note``)
    when ``n * p`` exceeds ``guard``.  A pair that fails the agreement check
    emits no timings, only note rows.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for n in ns:
        for p in ps:
            v, state, corr = bench_instance(n, p, rng)
            fns = {"matrix": lambda: lmc_logpdf_matrix(v, state, corr),
                   "naive": lambda: lmc_logpdf_naive(v, state, corr)}
            dense_ok = n * p <= guard
            if dense_ok:
                ref = lmc_logpdf_naive(v, state, corr)
                err = abs(lmc_logpdf_matrix(v, state, corr) - ref) / (1.0 + abs(ref))
                if err > AGREE_TOL:
                    for m in methods:
                        rows.append(dict(n=n, p=p, method=m, seconds=None, evals=evals,
                                         note=f"disagreement {err:.3g}"))
                    continue
            for m in methods:
                if m == "naive" and not dense_ok:
                    rows.append(dict(n=n, p=p, method=m, seconds=None, evals=evals,
                                     note=f"skipped: np={n * p} exceeds guard {guard}"))
                    continue
                rows.append(dict(n=n, p=p, method=m, seconds=time_evals(fns[m], evals, repeats),
                                 evals=evals, note=""))
    return rows
