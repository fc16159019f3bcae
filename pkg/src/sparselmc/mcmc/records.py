"""Sampler configuration and persisted posterior draws."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..model import CoregionalizationState, CorrelationFamily

MODES = ("standard", "sparse", "interweave_centered", "interweave_whitened", "interweave_both")
PHI_BLOCKS = ("joint", "component")


@dataclass
class SamplerConfig:
    """Run-length, tuning and update switches for the samplers.

    ``rj_moves_per_iter=None`` means p moves per iteration.  The ``update_*``
    flags switch individual Gibbs blocks off (the corresponding quantities
    then stay at their initial values), which is how the degenerate and
    fixed-parameter checks are run.  ``check_cache`` recomputes the cached
    Gram matrices from scratch after every block and asserts agreement.
    """

    iters: int = 2000
    burnin: int = 1000
    seed: int | None = None
    mh_step: float = 1.0
    slice_width: float = 1.0
    slice_max_steps: int = 10
    rj_moves_per_iter: int | None = None
    mode: str = "standard"
    phi_block: str = "joint"
    with_mean: bool = False
    family: CorrelationFamily = CorrelationFamily.EXPONENTIAL
    jitter: float = 0.0
    update_latent: bool = True
    update_coreg: bool = True
    update_mask: bool = True
    update_ranges: bool = True
    update_tau: bool = True
    update_mu: bool = True
    check_cache: bool = False

    def __post_init__(self):
        self.family = CorrelationFamily.parse(self.family)
        if self.iters < 0 or self.burnin < 0:
            raise ValueError("iters and burnin must be non-negative")
        if self.burnin > self.iters:
            raise ValueError(f"burnin ({self.burnin}) exceeds iters ({self.iters})")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.phi_block not in PHI_BLOCKS:
            raise ValueError(f"unknown phi_block {self.phi_block!r}; expected one of {PHI_BLOCKS}")
        if self.mh_step < 0:
            raise ValueError("mh_step must be non-negative")
        if not self.slice_width > 0:
            raise ValueError("slice_width must be positive")
        if self.slice_max_steps < 1:
            raise ValueError("slice_max_steps must be at least 1")
        if self.rj_moves_per_iter is not None and self.rj_moves_per_iter < 0:
            raise ValueError("rj_moves_per_iter must be non-negative")
        if not 0 <= self.jitter <= 1e-8:
            raise ValueError("jitter must lie in [0, 1e-8]")

    def replace(self, **changes) -> "SamplerConfig":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return SamplerConfig(**kw)


@dataclass
class ChainRecord:
    """One retained posterior draw.

    ``a`` and ``m`` are p x p (stored row-major when flattened).
    """

    a: np.ndarray
    m: np.ndarray
    phi: np.ndarray
    tau: np.ndarray
    mu: np.ndarray
    loglik: float

    @property
    def p(self) -> int:
        return self.phi.size

    def coreg(self) -> CoregionalizationState:
        return CoregionalizationState(self.a, self.m)

    def to_row(self) -> list[float]:
        return [*self.a.ravel(), *self.m.ravel().astype(float), *self.phi, *self.tau,
                *self.mu, self.loglik]

    @classmethod
    def from_row(cls, row, p: int) -> "ChainRecord":
        row = np.asarray(row, dtype=float)
        if row.size != 2 * p * p + 3 * p + 1:
            raise ValueError(f"chain row has {row.size} values, expected {2 * p * p + 3 * p + 1}")
        k = p * p
        a = row[:k].reshape(p, p)
        m = row[k:2 * k].reshape(p, p)
        if not np.all((m == 0) | (m == 1)):
            raise ValueError("mask columns must hold 0/1")
        rest = row[2 * k:]
        return cls(a=a.copy(), m=m.astype(bool), phi=rest[:p].copy(), tau=rest[p:2 * p].copy(),
                   mu=rest[2 * p:3 * p].copy(), loglik=float(rest[3 * p]))

    @staticmethod
    def header(p: int) -> list[str]:
        sep = "" if p < 10 else "_"
        idx = [f"{i}{sep}{j}" for i in range(1, p + 1) for j in range(1, p + 1)]
        return ([f"a_{s}" for s in idx] + [f"m_{s}" for s in idx]
                + [f"phi_{j}" for j in range(1, p + 1)] + [f"tau_{j}" for j in range(1, p + 1)]
                + [f"mu_{j}" for j in range(1, p + 1)] + ["loglik"])

    def __eq__(self, other):
        if not isinstance(other, ChainRecord):
            return NotImplemented
        return (np.array_equal(self.a, other.a) and np.array_equal(self.m, other.m)
                and np.array_equal(self.phi, other.phi) and np.array_equal(self.tau, other.tau)
                and np.array_equal(self.mu, other.mu) and self.loglik == other.loglik)


class ChainResult(list):
    """List of ``(ChainRecord, V)`` pairs with run statistics in ``stats``."""

    def __init__(self, items=(), stats=None):
        super().__init__(items)
        self.stats = {} if stats is None else stats

    @property
    def records(self) -> list[ChainRecord]:
        return [r for r, _ in self]

    @property
    def latents(self) -> list[np.ndarray]:
        return [v for _, v in self]
