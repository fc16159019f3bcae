"""Flat ``key = value`` run configuration with dotted keys.

Every key has a type and a default; unknown keys and malformed values are
rejected with :class:`ConfigError`.  Example::

    seed = 7
    simulate.kind = diagonal
    simulate.p = 5
    mcmc.iters = 2000
    prior.pi = 0.25
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .io import DataFormatError, read_key_values
from .mcmc.records import MODES, PHI_BLOCKS, SamplerConfig
from .model import CorrelationFamily, PriorSpec

__all__ = ["ConfigError", "RunConfig", "SCHEMA", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid configuration key or value."""


def _bool(s: str) -> bool:
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s: str):
    return None if s.strip().lower() in ("", "none", "default") else float(s)


def _opt_int(s: str):
    return None if s.strip().lower() in ("", "none", "default") else int(s)


def _floats(s: str):
    return tuple(float(x) for x in s.replace(";", ",").split(",") if x.strip())


def _ints(s: str):
    return tuple(int(x) for x in s.split(",") if x.strip())


def _matrix(s: str):
    rows = [r for r in s.split(";") if r.strip()]
    mat = np.array([[float(x) for x in r.split(",")] for r in rows])
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("expected a square matrix with rows separated by ';'")
    return mat


def _choice(*options):
    def parse(s: str) -> str:
        s = s.strip()
        if s not in options:
            raise ValueError(f"expected one of {options}, got {s!r}")
        return s
    return parse


def _str(s: str):
    return s.strip() or None


# key -> (parser, default)
SCHEMA: dict[str, tuple] = {
    "seed": (int, 0),
    "model.family": (_choice(*(f.value for f in CorrelationFamily)), "exponential"),
    "model.jitter": (float, 0.0),
    "prior.a_sd": (float, 1.0),
    "prior.phi_min": (float, 3.0),
    "prior.phi_max": (float, 30.0),
    "prior.tau_shape": (float, 1.0),
    "prior.tau_scale": (float, 1.0),
    "prior.mu_var": (float, 10.0),
    "prior.pi": (_opt_float, None),
    "mcmc.iters": (int, 2000),
    "mcmc.burnin": (int, 1000),
    "mcmc.mode": (_choice(*MODES, "interweave"), "standard"),
    "mcmc.mh_step": (float, 1.0),
    "mcmc.slice_width": (float, 1.0),
    "mcmc.slice_max_steps": (int, 10),
    "mcmc.rj_moves_per_iter": (_opt_int, None),
    "mcmc.phi_block": (_choice(*PHI_BLOCKS), "joint"),
    "mcmc.with_mean": (_bool, False),
    "simulate.kind": (_choice("full", "diagonal", "custom"), "full"),
    "simulate.p": (int, 5),
    "simulate.n": (int, 100),
    "simulate.tau": (float, 0.25),
    "simulate.a": (_matrix, None),
    "simulate.phi": (_floats, None),
    "simulate.mu": (_floats, None),
    "simulate.missing": (float, 0.0),
    "grid.nx": (int, 10),
    "grid.ny": (int, 10),
    "grid.points": (_str, None),
    "data.path": (_str, None),
    "chain.path": (_str, None),
    "latent.path": (_str, None),
    "truth.path": (_str, None),
    "predict.draws": (_bool, False),
    "bench.n": (_ints, (50, 100, 200)),
    "bench.p": (_ints, (2, 4, 8, 16)),
    "bench.evals": (int, 20),
    "bench.repeats": (int, 5),
    "bench.guard": (int, 4000),
    "summary.distances": (_floats, (0.0,)),
}


@dataclass
class RunConfig:
    """Validated configuration; ``values`` maps every schema key to its value."""

    values: dict = field(default_factory=lambda: {k: d for k, (_, d) in SCHEMA.items()})
    explicit: set = field(default_factory=set)

    def __getitem__(self, key):
        return self.values[key]

    def set(self, key: str, value) -> None:
        if key not in SCHEMA:
            raise ConfigError(f"unknown configuration key {key!r}")
        self.values[key] = value
        self.explicit.add(key)

    def prior(self) -> PriorSpec:
        v = self.values
        try:
            return PriorSpec(a_sd=v["prior.a_sd"], phi_min=v["prior.phi_min"],
                             phi_max=v["prior.phi_max"], tau_shape=v["prior.tau_shape"],
                             tau_scale=v["prior.tau_scale"], mu_var=v["prior.mu_var"],
                             pi_sparsity=v["prior.pi"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def sampler(self, mode: str | None = None) -> SamplerConfig:
        v = self.values
        mode = v["mcmc.mode"] if mode is None else mode
        if mode == "interweave":
            mode = "interweave_both"
        try:
            return SamplerConfig(iters=v["mcmc.iters"], burnin=v["mcmc.burnin"], seed=v["seed"],
                                 mh_step=v["mcmc.mh_step"], slice_width=v["mcmc.slice_width"],
                                 slice_max_steps=v["mcmc.slice_max_steps"],
                                 rj_moves_per_iter=v["mcmc.rj_moves_per_iter"], mode=mode,
                                 phi_block=v["mcmc.phi_block"], with_mean=v["mcmc.with_mean"],
                                 family=v["model.family"], jitter=v["model.jitter"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def validate(self) -> "RunConfig":
        self.prior()
        self.sampler()
        v = self.values
        if v["simulate.p"] < 1 or v["simulate.n"] < 1:
            raise ConfigError("simulate.p and simulate.n must be at least 1")
        if not v["simulate.tau"] > 0:
            raise ConfigError("simulate.tau must be positive")
        if not 0 <= v["simulate.missing"] < 1:
            raise ConfigError("simulate.missing must lie in [0, 1)")
        if v["grid.nx"] < 1 or v["grid.ny"] < 1:
            raise ConfigError("grid.nx and grid.ny must be at least 1")
        if v["bench.evals"] < 1 or v["bench.repeats"] < 1:
            raise ConfigError("bench.evals and bench.repeats must be at least 1")
        if v["simulate.kind"] == "custom":
            a, phi = v["simulate.a"], v["simulate.phi"]
            if a is None or phi is None:
                raise ConfigError("simulate.kind = custom needs simulate.a and simulate.phi")
            if len(phi) != a.shape[0]:
                raise ConfigError("simulate.phi length does not match simulate.a")
        return self


def parse_config(items: dict[str, str]) -> RunConfig:
    """Build a :class:`RunConfig` from raw string values."""
    cfg = RunConfig()
    for key, raw in items.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown configuration key {key!r}")
        parser = SCHEMA[key][0]
        try:
            cfg.set(key, parser(raw))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
    return cfg.validate()


def load_config(path=None) -> RunConfig:
    """Read a config file (or return the defaults when ``path`` is None)."""
    if path is None:
        return RunConfig().validate()
    try:
        items = read_key_values(path)
    except DataFormatError as exc:
        raise ConfigError(str(exc)) from None
    return parse_config(items)
