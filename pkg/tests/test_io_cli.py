import numpy as np
import pytest

from sparselmc import Locations, ObservedData, io
from sparselmc.cli import main
from sparselmc.config import ConfigError, load_config, parse_config
from sparselmc.mcmc import ChainRecord


def _data(rng, n=6, p=2, missing=0.3):
    avail = rng.random((p, n)) > missing
    return Locations.uniform(n, rng), ObservedData(np.where(avail, rng.normal(size=(p, n)), 0.0), avail)


class TestDataset:
    def test_round_trip_exact(self, tmp_path, rng):
        locs, data = _data(rng)
        io.save_dataset(tmp_path / "d.csv", locs, data)
        l2, d2 = io.load_dataset(tmp_path / "d.csv")
        np.testing.assert_array_equal(l2.points, locs.points)
        np.testing.assert_array_equal(d2.avail, data.avail)
        np.testing.assert_array_equal(d2.y[d2.avail], data.y[data.avail])

    def test_california_shaped_file(self, tmp_path, rng):
        n, rates = 131, (0.25, 0.10, 0.09, 0.05)
        avail = np.array([rng.permutation(n) >= round(r * n) for r in rates])
        locs = Locations.uniform(n, rng)
        data = ObservedData(np.where(avail, rng.normal(size=(4, n)), 0.0), avail)
        io.save_dataset(tmp_path / "ca.csv", locs, data)
        l2, d2 = io.load_dataset(tmp_path / "ca.csv")
        assert d2.p == 4 and d2.n == 131
        np.testing.assert_array_equal((~d2.avail).sum(axis=1), [33, 13, 12, 7])

    @pytest.mark.parametrize("body,msg", [
        ("x,y,v1\n0,0,1\n0.5,zz,1\n", "line 3"),
        ("x,y,v1\n0,0\n", "line 2"),
        ("x,z,v1\n0,0,1\n", "header"),
        ("x,y,v1\n0,0,1\n0,0,2\n", "duplicate"),
        ("x,y,v1\n0,0,inf\n", "line 2"),
    ])
    def test_parse_errors(self, tmp_path, body, msg):
        (tmp_path / "bad.csv").write_text(body)
        with pytest.raises(io.DataFormatError, match=msg):
            io.load_dataset(tmp_path / "bad.csv")


class TestChainFiles:
    def _recs(self, rng, p=3, k=5):
        return [ChainRecord(a=rng.normal(size=(p, p)), m=rng.random((p, p)) > 0.3,
                            phi=rng.uniform(3, 30, p), tau=rng.random(p), mu=rng.normal(size=p),
                            loglik=float(rng.normal())) for _ in range(k)]

    def test_round_trip_exact(self, tmp_path, rng):
        recs = self._recs(rng)
        io.save_chain(tmp_path / "c.csv", recs)
        assert io.load_chain(tmp_path / "c.csv") == recs

    def test_writer_streams(self, tmp_path, rng):
        recs = self._recs(rng, p=2, k=7)
        with io.ChainWriter(tmp_path / "c.csv", 2, flush_every=3) as w:
            for r in recs:
                w.write(r)
            assert w.count == 7
        assert io.load_chain(tmp_path / "c.csv") == recs

    def test_header_only(self, tmp_path):
        io.save_chain(tmp_path / "c.csv", [], p=2)
        assert io.load_chain(tmp_path / "c.csv") == []

    def test_latents_round_trip(self, tmp_path, rng):
        vs = [rng.normal(size=(2, 4)) for _ in range(3)]
        with io.LatentWriter(tmp_path / "l.csv", 2, 4) as w:
            for v in vs:
                w.write(v)
        for a, b in zip(io.load_latents(tmp_path / "l.csv", 2), vs):
            np.testing.assert_array_equal(a, b)

    def test_key_values(self, tmp_path):
        io.write_key_values(tmp_path / "k.txt", {"x": 1.5, "v": np.array([1.0, 2.0]),
                                                 "m": np.eye(2)})
        kv = io.read_key_values(tmp_path / "k.txt")
        assert float(kv["x"]) == 1.5 and kv["v"] == "1, 2" and kv["m"] == "1, 0; 0, 1"


class TestConfig:
    def test_defaults(self):
        cfg = load_config()
        assert cfg["mcmc.iters"] == 2000 and cfg.prior().pi_sparsity is None

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown"):
            parse_config({"mcmc.iterations": "3"})

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="mcmc.iters"):
            parse_config({"mcmc.iters": "many"})

    def test_cross_field_checks(self):
        with pytest.raises(ConfigError):
            parse_config({"mcmc.burnin": "10", "mcmc.iters": "5"})
        with pytest.raises(ConfigError, match="custom"):
            parse_config({"simulate.kind": "custom"})

    def test_file(self, tmp_path):
        (tmp_path / "c.txt").write_text("# run\nseed = 3\nprior.pi = 0.4\nmcmc.mode = interweave\n")
        cfg = load_config(tmp_path / "c.txt")
        assert cfg["seed"] == 3 and cfg.prior().pi_sparsity == 0.4
        assert cfg.sampler().mode == "interweave_both"


def _write_cfg(path, **items):
    path.write_text("".join(f"{k} = {v}\n" for k, v in items.items()))
    return str(path)


@pytest.fixture
def small_cfg(tmp_path):
    return _write_cfg(tmp_path / "run.txt", **{
        "simulate.p": 2, "simulate.n": 15, "simulate.missing": 0.1, "mcmc.iters": 12,
        "mcmc.burnin": 4, "grid.nx": 3, "grid.ny": 3, "bench.n": "10", "bench.p": "2",
        "bench.evals": 1, "bench.repeats": 1})


class TestCLI:
    def test_pipeline(self, tmp_path, small_cfg, capsys):
        out = str(tmp_path / "o")
        assert main(["simulate", "--config", small_cfg, "--out", out, "--seed", "4"]) == 0
        assert main(["fit", "--config", small_cfg, "--out", out, "--mode", "sparse"]) == 0
        assert main(["predict", "--config", small_cfg, "--out", out]) == 0
        assert "rmse" in capsys.readouterr().out
        recs = io.load_chain(tmp_path / "o" / "chain.csv")
        assert len(recs) == 8
        assert len(io.load_latents(tmp_path / "o" / "latent.csv", 2)) == 8
        header, arr = io.load_matrix_csv(tmp_path / "o" / "predictions.csv")
        assert arr.shape == (9, 8) and header[2] == "mean_1"
        summary = io.read_key_values(tmp_path / "o" / "summary.txt")
        assert summary["mode"] == "sparse" and summary["records"] == "8"
        assert float(io.read_key_values(tmp_path / "o" / "predict_summary.txt")["rmse"]) > 0

    def test_simulate_deterministic(self, tmp_path, small_cfg):
        for d in ("a", "b"):
            assert main(["simulate", "--config", small_cfg, "--out", str(tmp_path / d)]) == 0
        for f in ("data.csv", "grid_truth.csv", "truth.txt"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_truth_file_carries_ranges(self, tmp_path):
        cfg = _write_cfg(tmp_path / "c.txt", **{"simulate.kind": "diagonal", "simulate.p": 5,
                                                   "simulate.n": 10, "grid.nx": 2, "grid.ny": 2})
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
        kv = io.read_key_values(tmp_path / "truth.txt")
        phi = np.array([float(x) for x in kv["phi"].split(",")])
        assert phi[0] == 5.0 and phi[-1] == 25.0 and phi.size == 5
        assert kv["mask"] == "; ".join(", ".join("1" if i == j else "0" for j in range(5))
                                       for i in range(5))

    def test_standard_mode_full_mask_and_empty_chain(self, tmp_path, small_cfg):
        out = str(tmp_path)
        main(["simulate", "--config", small_cfg, "--out", out])
        assert main(["fit", "--config", small_cfg, "--out", out, "--mode", "standard"]) == 0
        header, arr = io.load_matrix_csv(tmp_path / "chain.csv")
        mcols = [k for k, h in enumerate(header) if h.startswith("m_")]
        assert np.all(arr[:, mcols] == 1)
        cfg = _write_cfg(tmp_path / "c2.txt", **{"mcmc.iters": 5, "mcmc.burnin": 5})
        assert main(["fit", "--config", cfg, "--out", out]) == 0
        assert io.load_chain(tmp_path / "chain.csv") == []
        assert main(["predict", "--config", cfg, "--out", out]) == 1

    def test_bench(self, tmp_path, small_cfg):
        assert main(["bench", "--config", small_cfg, "--out", str(tmp_path)]) == 0
        text = (tmp_path / "bench.csv").read_text().splitlines()
        assert text[0] == "n,p,method,seconds,evals,note" and len(text) == 3

    @pytest.mark.parametrize("mask,code", [("11;01", 0), ("111;111;110", 0), ("110;110;100", 1),
                                           ("12;01", 1), ("11;1", 1)])
    def test_mask_check(self, mask, code, capsys):
        assert main(["mask-check", mask]) == code

    def test_exit_codes(self, tmp_path, capsys):
        bad = _write_cfg(tmp_path / "bad.txt", **{"nonsense": 1})
        assert main(["simulate", "--config", bad, "--out", str(tmp_path)]) == 1
        assert main(["fit", "--out", str(tmp_path / "missing")]) == 1
        (tmp_path / "data.csv").write_text("x,y,v1\n0,0,abc\n")
        assert main(["fit", "--out", str(tmp_path)]) == 1
        assert "line 2" in capsys.readouterr().err
        sing = _write_cfg(tmp_path / "s.txt", **{"simulate.kind": "custom", "simulate.a": "1,1;1,1",
                                                    "simulate.phi": "5,10"})
        assert main(["simulate", "--config", sing, "--out", str(tmp_path)]) == 1
