"""Command-line interface: ``sparselmc {simulate,fit,predict,bench,mask-check}``.

Exit status is 0 on success, 1 for invalid input (bad config, malformed
file, inadmissible mask) and 2 for runtime or numerical failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .bench import BENCH_COLUMNS, run_bench
from .config import ConfigError, RunConfig, load_config
from .mcmc import chain_summaries, effective_sample_size, run
from .model import CoregionalizationState, Locations
from .predict import posterior_predict, posterior_rmse
from .simulate import make_study_scenario, sample_observed, simulate_fields
from .sparsity import format_mask, is_admissible, parse_mask

log = logging.getLogger("sparselmc")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
FIT_MODES = {"standard": "standard", "sparse": "sparse", "interweave": "interweave_both",
             "interweave_centered": "interweave_centered",
             "interweave_whitened": "interweave_whitened", "interweave_both": "interweave_both"}


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.set("seed", args.seed)
    return cfg


def _path(cfg: RunConfig, key: str, out: Path, default: str) -> Path:
    return Path(cfg[key]) if cfg[key] else out / default


def _grid(cfg: RunConfig) -> Locations:
    if cfg["grid.points"]:
        header, arr = io.load_matrix_csv(cfg["grid.points"])
        if header[:2] != ["x", "y"]:
            raise io.DataFormatError(f"{cfg['grid.points']}: line 1: header must start with x,y")
        return Locations(arr[:, :2])
    return Locations.grid(cfg["grid.nx"], cfg["grid.ny"])


def _save_field(path, locs: Locations, v) -> None:
    p = v.shape[0]
    io.save_matrix_csv(path, ["x", "y"] + [f"v{j}" for j in range(1, p + 1)],
                       np.column_stack([locs.points, v.T]))


# --------------------------------------------------------------------- verbs

def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = _out(args)
    seeds = np.random.SeedSequence(cfg["seed"]).spawn(3)
    rng_loc, rng_field, rng_obs = (np.random.default_rng(s) for s in seeds)
    kind, p, n = cfg["simulate.kind"], cfg["simulate.p"], cfg["simulate.n"]
    if kind == "custom":
        a = cfg["simulate.a"]
        p = a.shape[0]
        locs = Locations.uniform(n, rng_loc)
        try:
            state = CoregionalizationState(a, a != 0)
        except ValueError as exc:
            raise ConfigError(f"simulate.a: {exc}") from None
        phi = np.array(cfg["simulate.phi"])
        tau = np.full(p, cfg["simulate.tau"])
    else:
        locs, state, phi, tau = make_study_scenario(kind, p, n, rng_loc, tau=cfg["simulate.tau"])
    mu = np.zeros(p) if cfg["simulate.mu"] is None else np.array(cfg["simulate.mu"])
    if mu.shape != (p,):
        raise ConfigError(f"simulate.mu needs {p} values")
    grid = _grid(cfg)
    v, v_grid = simulate_fields(state, phi, locs, rng_field, extra=grid, family=cfg["model.family"])
    avail = rng_obs.uniform(size=(p, n)) >= cfg["simulate.missing"]
    data = sample_observed(v, tau, mu, avail, rng_obs)
    io.save_dataset(out / "data.csv", locs, data)
    _save_field(out / "grid_truth.csv", grid, v_grid + mu[:, None])
    io.write_key_values(out / "truth.txt", {
        "kind": kind, "p": p, "n": n, "seed": cfg["seed"],
        "a": state.effective, "mask": state.mask.astype(int), "phi": phi, "tau": tau, "mu": mu,
    })
    print(f"wrote {n} locations x {p} components to {out}")
    return EXIT_OK


def _fit_summary(chain, distances) -> dict:
    recs = chain.records
    items: dict = {"records": len(recs)}
    items.update({f"stats.{k}": v for k, v in chain.stats.items()})
    if not recs:
        return items
    p = recs[0].p
    s = chain_summaries(recs, distances=distances)
    for key in s.median:
        for label, src in (("median", s.median), ("q05", s.lower), ("q95", s.upper)):
            items[f"{label}.{key}"] = src[key]
    items["independence"] = s.independence
    items["nnz.mean"] = s.nnz_mean
    for k, c in s.nnz_counts.items():
        items[f"nnz.count.{k}"] = c
    if len(recs) >= 10:
        items["ess.loglik"] = effective_sample_size([r.loglik for r in recs])
        for i in range(p):
            for j in range(i + 1, p):
                c0 = [float((r.a * r.m)[i] @ (r.a * r.m)[j]) for r in recs]
                items[f"ess.c_{i + 1}_{j + 1}"] = effective_sample_size(c0)
    return items


def cmd_fit(args) -> int:
    cfg = _config(args)
    out = _out(args)
    mode = FIT_MODES[args.mode] if args.mode else None
    sampler = cfg.sampler(mode)
    prior = cfg.prior()
    locs, data = io.load_dataset(_path(cfg, "data.path", out, "data.csv"))
    chain_path = _path(cfg, "chain.path", out, "chain.csv")
    latent_path = _path(cfg, "latent.path", out, "latent.csv")
    with io.ChainWriter(chain_path, data.p) as cw, io.LatentWriter(latent_path, data.p, data.n) as lw:
        def sink(rec, v):
            cw.write(rec)
            lw.write(v)
        try:
            chain = run(data, locs, prior, sampler, callback=sink)
        except KeyboardInterrupt:
            log.error("interrupted; %d records flushed to %s", cw.count, chain_path)
            return EXIT_RUNTIME
    io.write_key_values(out / "summary.txt",
                        {"mode": sampler.mode, **_fit_summary(chain, cfg["summary.distances"])})
    print(f"{sampler.mode}: kept {len(chain)} of {sampler.iters} iterations; wrote {chain_path}")
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = _config(args)
    out = _out(args)
    locs, data = io.load_dataset(_path(cfg, "data.path", out, "data.csv"))
    chain = io.load_chain(_path(cfg, "chain.path", out, "chain.csv"))
    latents = io.load_latents(_path(cfg, "latent.path", out, "latent.csv"), data.p)
    if not chain:
        raise ConfigError("chain file holds no records")
    if chain[0].p != data.p:
        raise ConfigError(f"chain has p={chain[0].p} but data has p={data.p}")
    if latents and latents[0].shape[1] != data.n:
        raise ConfigError("latent draws do not match the data locations")
    grid = _grid(cfg)
    rng = np.random.default_rng(cfg["seed"])
    pred = posterior_predict(chain, latents, locs, grid, family=cfg["model.family"],
                             jitter=cfg["model.jitter"], draws=cfg["predict.draws"], rng=rng)
    p = data.p
    header = (["x", "y"] + [f"mean_{j}" for j in range(1, p + 1)]
              + [f"q05_{j}" for j in range(1, p + 1)] + [f"q95_{j}" for j in range(1, p + 1)])
    io.save_matrix_csv(out / "predictions.csv", header,
                       np.column_stack([grid.points, pred.mean.T, pred.lower.T, pred.upper.T]))
    truth_path = cfg["truth.path"]
    if truth_path is None and (out / "grid_truth.csv").exists() and not cfg["grid.points"]:
        truth_path = out / "grid_truth.csv"
    if truth_path is not None:
        _, arr = io.load_matrix_csv(truth_path)
        if arr.shape != (grid.n, p + 2) or not np.allclose(arr[:, :2], grid.points):
            raise ConfigError(f"{truth_path}: truth locations do not match the prediction grid")
        score = posterior_rmse(pred.samples, arr[:, 2:].T)
        io.write_key_values(out / "predict_summary.txt", {"rmse": score, "records": len(chain)})
        print(f"rmse = {score:.6g}")
    print(f"wrote predictions at {grid.n} locations to {out / 'predictions.csv'}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    out = _out(args)
    rows = run_bench(cfg["bench.n"], cfg["bench.p"], cfg["bench.evals"], cfg["bench.repeats"],
                     cfg["bench.guard"], cfg["seed"])
    io.save_matrix_csv(out / "bench.csv", BENCH_COLUMNS,
                       [[str(r["n"]), str(r["p"]), r["method"],
                         "" if r["seconds"] is None else io.FMT % r["seconds"],
                         str(r["evals"]), r["note"]] for r in rows])
    print(f"wrote {len(rows)} rows to {out / 'bench.csv'}")
    return EXIT_OK


def cmd_mask_check(args) -> int:
    try:
        m = parse_mask(args.mask)
    except ValueError as exc:
        print(f"malformed mask: {exc}", file=sys.stderr)
        return EXIT_INVALID
    ok = is_admissible(m)
    print(f"{format_mask(m)}: {'admissible' if ok else 'inadmissible'}")
    return EXIT_OK if ok else EXIT_INVALID


# ---------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparselmc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None, help="key = value config file")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        return p

    common(sub.add_parser("simulate", help="simulate a study dataset")).set_defaults(fn=cmd_simulate)
    fit = common(sub.add_parser("fit", help="run a sampler on a dataset"))
    fit.add_argument("--mode", choices=sorted(FIT_MODES), default=None)
    fit.set_defaults(fn=cmd_fit)
    common(sub.add_parser("predict", help="krige posterior draws to a grid")).set_defaults(fn=cmd_predict)
    common(sub.add_parser("bench", help="time likelihood evaluations")).set_defaults(fn=cmd_bench)
    mc = sub.add_parser("mask-check", help="test a mask for admissibility")
    mc.add_argument("mask", help="rows of 0/1 separated by ';', e.g. 110;011;111")
    mc.set_defaults(fn=cmd_mask_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.fn(args)
    except (ConfigError, io.DataFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
