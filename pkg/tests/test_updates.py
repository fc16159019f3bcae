import numpy as np
import pytest
from scipy import stats

from sparselmc import CoregionalizationState, ObservedData, PriorSpec, build_corr_set
from sparselmc.density import dense_lmc_covariance, gram_matrices
from sparselmc.mcmc import (
    coreg_loglik,
    mu_posterior,
    reflect,
    rj_sweep,
    slice_sample_1d,
    tau_posterior,
    update_coreg_conjugate_given_w,
    update_coreg_slice,
    update_latent,
    update_mu_conjugate,
    update_ranges_mh,
    update_tau_conjugate,
)

from conftest import random_instance


class ConstantNormals:
    """Stand-in generator whose normal draws are a fixed constant."""

    def __init__(self, value=0.0):
        self.value = value

    def standard_normal(self, size=None):
        return self.value if size is None else np.full(size, self.value)


class TestSliceSampler:
    def test_standard_normal_target(self, rng):
        x, lf = 0.0, None
        draws = np.empty(20000)
        for k in range(draws.size):
            x, lf = slice_sample_1d(lambda t: -0.5 * t * t, x, 1.0, 10, rng, lf)
            draws[k] = x
        assert stats.kstest(draws, "norm").statistic < 0.03
        assert abs(draws.mean()) < 0.05

    def test_respects_zero_density(self, rng):
        x = 0.5
        for _ in range(2000):
            x, _ = slice_sample_1d(lambda t: 0.0 if 0 < t < 1 else -np.inf, x, 0.3, 5, rng)
            assert 0 < x < 1


class TestReflect:
    def test_stays_in_support(self, rng):
        starts = np.concatenate([np.full(500_000, 3.0), np.full(500_000, 30.0)])
        out = reflect(starts + 4.0 * rng.normal(size=starts.size), 3.0, 30.0)
        assert out.min() >= 3.0 and out.max() <= 30.0

    def test_mirror(self):
        np.testing.assert_allclose(reflect([2.0, 31.0, 60.0, 10.0], 3.0, 30.0), [4.0, 29.0, 6.0, 10.0])


class TestLatentSweep:
    def _dense_posterior(self, y, state, corr, tau, mu):
        p, n = y.y.shape
        cov = dense_lmc_covariance(state, corr)
        keep = y.avail.ravel(order="F")
        d = np.tile(tau, n)[keep]
        h = cov[:, keep]
        gain = np.linalg.solve(cov[np.ix_(keep, keep)] + np.diag(d), h.T).T
        resid = y.y.ravel(order="F")[keep] - np.tile(mu, n)[keep]
        mean = np.tile(mu, n) + gain @ resid
        return mean.reshape(p, n, order="F"), cov - gain @ h.T

    def test_long_run_matches_dense_posterior(self):
        rng = np.random.default_rng(8)
        _, state, _, corr, v0 = random_instance(rng, 4, 2)
        mu = np.array([0.5, -0.3])
        tau = np.array([0.3, 0.6])
        avail = np.array([[1, 0, 1, 1], [1, 1, 0, 1]], dtype=bool)
        y = ObservedData(np.where(avail, v0 + mu[:, None] + 0.5 * rng.normal(size=v0.shape), 0.0), avail)
        mean, cov = self._dense_posterior(y, state, corr, tau, mu)
        v = np.zeros((2, 4))
        draws = np.empty((20000, 2, 4))
        for k in range(draws.shape[0]):
            v = update_latent(v, y, state, corr, tau, mu, rng)
            draws[k] = v
        flat = draws.reshape(20, -1, 8)
        batch = flat.mean(axis=1)  # batch means over contiguous blocks
        se = batch.std(axis=0, ddof=1) / np.sqrt(batch.shape[0])
        emp = draws.mean(axis=0).ravel()
        assert np.all(np.abs(emp - mean.ravel()) < 5 * np.maximum(se, 1e-3))
        emp_cov = np.cov(draws.transpose(0, 2, 1).reshape(len(draws), -1).T)
        np.testing.assert_allclose(emp_cov, cov, atol=0.08 * np.abs(cov).max())

    def test_no_data_gives_prior(self):
        rng = np.random.default_rng(9)
        _, state, _, corr, _ = random_instance(rng, 3, 2)
        y = ObservedData(np.full((2, 3), 7.0), np.zeros((2, 3), dtype=bool))
        cov = dense_lmc_covariance(state, corr)
        v = np.zeros((2, 3))
        draws = np.empty((20000, 6))
        for k in range(len(draws)):
            v = update_latent(v, y, state, corr, np.ones(2), np.zeros(2), rng)
            draws[k] = v.ravel(order="F")
        np.testing.assert_allclose(np.cov(draws.T), cov, atol=0.08 * np.abs(cov).max())

    def test_tiny_noise_pins_to_data(self, rng):
        _, state, _, corr, v0 = random_instance(rng, 10, 3)
        y = ObservedData.complete(v0 + 1.0)
        v = update_latent(np.zeros_like(v0), y, state, corr, np.full(3, 1e-12), np.zeros(3), rng)
        np.testing.assert_allclose(v, y.y, atol=1e-4)

    def test_placeholders_do_not_matter(self, rng):
        _, state, _, corr, v0 = random_instance(rng, 10, 2)
        avail = rng.random(v0.shape) > 0.3
        args = (state, corr, np.ones(2), np.zeros(2))
        y1 = ObservedData(np.where(avail, v0, 0.0), avail)
        y2 = ObservedData(np.where(avail, v0, -1e9), avail)
        a = update_latent(v0, y1, *args, np.random.default_rng(1))
        b = update_latent(v0, y2, *args, np.random.default_rng(1))
        np.testing.assert_array_equal(a, b)


def _quadrature_cdf(logf, lo, hi, m=400_001):
    x = np.linspace(lo, hi, m)
    lf = logf(x)
    f = np.exp(lf - lf.max())
    c = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(x))])
    return x, c / c[-1]


def ks_to_grid(draws, x, cdf):
    s = np.sort(draws)
    f = np.interp(s, x, cdf)
    k = np.arange(1, s.size + 1) / s.size
    return max(np.max(k - f), np.max(f - (k - 1.0 / s.size)))


class TestCoregSlice:
    def test_masked_cells_fixed(self, rng):
        mask = np.array([[1, 0, 0], [1, 1, 0], [0, 1, 1]], dtype=bool)
        _, state, _, corr, v = random_instance(rng, 10, 3, mask=mask)
        new = update_coreg_slice(state, gram_matrices(v, corr), 10, PriorSpec(), rng)
        np.testing.assert_array_equal(new.effective[~mask], 0.0)
        np.testing.assert_array_equal(new.a[~mask], state.a[~mask])
        assert np.all(new.a[mask] != state.a[mask])

    def test_entry_density_matches_full_recompute(self, rng):
        from sparselmc.mcmc.updates import _EntryDensity

        _, state, _, corr, v = random_instance(rng, 8, 3)
        g = gram_matrices(v, corr)
        dens = _EntryDensity(state, g, 8, 1, 2, 1.3)
        for x in (-2.0, 0.1, 0.9, 3.0):
            s = state.with_entry(1, 2, x)
            ref = coreg_loglik(s, g, 8) - 0.5 * x * x / 1.3 ** 2
            assert dens(x) == pytest.approx(ref, rel=1e-10, abs=1e-10)

    def test_univariate_posterior(self):
        rng = np.random.default_rng(14)
        _, state, _, corr, v = random_instance(rng, 5, 1, phi=[8.0])
        g = gram_matrices(v, corr)
        gg = g[0, 0, 0]
        logf = lambda a: -0.5 * a * a - 0.5 * gg / (a * a) - 5 * np.log(np.abs(a))
        x, cdf = _quadrature_cdf(lambda a: np.where(a > 0, logf(np.abs(a) + 1e-300), -np.inf), 1e-6, 12.0)
        s = state
        draws = np.empty(30000)
        for k in range(draws.size):
            s = update_coreg_slice(s, g, 5, PriorSpec(), rng)
            draws[k] = s.a[0, 0]
        # the target is symmetric in the sign of a; compare |a|
        assert ks_to_grid(np.abs(draws), x, cdf) < 0.03


class TestCoregConjugate:
    def _p1(self):
        rng = np.random.default_rng(3)
        w = rng.normal(size=(1, 12))
        y = ObservedData(2.0 * w + 0.3 * rng.normal(size=w.shape) + 0.5, np.ones((1, 12), dtype=bool))
        return w, y

    def test_univariate_closed_form(self):
        w, y = self._p1()
        tau, mu, prior = np.array([0.09]), np.array([0.5]), PriorSpec(a_sd=1.7)
        x, r = w[0], y.y[0] - 0.5
        var = 1.0 / (x @ x / tau[0] + 1.0 / 1.7 ** 2)
        mean = var * (x @ r) / tau[0]
        s = CoregionalizationState([[1.0]])
        got0 = update_coreg_conjugate_given_w(s, w, y, tau, mu, prior, ConstantNormals(0.0)).a[0, 0]
        got1 = update_coreg_conjugate_given_w(s, w, y, tau, mu, prior, ConstantNormals(1.0)).a[0, 0]
        assert got0 == pytest.approx(mean, rel=1e-10)
        assert got1 - got0 == pytest.approx(np.sqrt(var), rel=1e-10)

    def test_prior_domination(self):
        w, y = self._p1()
        s = update_coreg_conjugate_given_w(CoregionalizationState([[1.0]]), w, y, np.array([0.1]),
                                           np.zeros(1), PriorSpec(a_sd=1e-9), ConstantNormals(0.0))
        assert abs(s.a[0, 0]) < 1e-12

    def test_mask_respected_and_missing_row_is_prior(self, rng):
        mask = np.array([[1, 0], [1, 1]], dtype=bool)
        w = rng.normal(size=(2, 30))
        avail = np.ones((2, 30), dtype=bool)
        avail[1] = False
        y = ObservedData(np.where(avail, w, 0.0), avail)
        state = CoregionalizationState([[1.0, 0.0], [0.2, 1.0]], mask)
        draws = []
        for _ in range(4000):
            s = update_coreg_conjugate_given_w(state, w, y, np.array([0.5, 0.5]), np.zeros(2),
                                               PriorSpec(a_sd=2.0), rng)
            assert s.a[0, 1] == 0.0
            draws.append(s.a[1])
        draws = np.array(draws)
        # row 2 has no data: N(0, 2^2) prior, SE of the mean 2/sqrt(N)
        assert np.all(np.abs(draws.mean(axis=0)) < 5 * 2.0 / np.sqrt(4000))
        assert np.all(np.abs(draws.var(axis=0) - 4.0) < 5 * 4.0 * np.sqrt(2 / 4000))


class TestRanges:
    def test_zero_step_always_accepts(self, instance, rng):
        locs, state, phi, corr, v = instance
        out, c = update_ranges_mh(phi, state, v, np.zeros(3), locs.distances(), corr, PriorSpec(), rng, step=0.0)
        np.testing.assert_array_equal(out, phi)

    def test_accept_replaces_caches(self, rng):
        locs, state, phi, corr, v = random_instance(rng, 6, 2, phi=[5.0, 9.0])
        for _ in range(50):
            new_phi, new_corr = update_ranges_mh(phi, state, v, np.zeros(2), locs.distances(), corr,
                                                 PriorSpec(), rng, step=2.0, block="component")
            ref = build_corr_set(locs, new_phi)
            np.testing.assert_allclose(new_corr.r_inv, ref.r_inv, rtol=1e-8, atol=1e-10)
            np.testing.assert_allclose(new_corr.log_det, ref.log_det, rtol=1e-10, atol=1e-12)
            phi, corr = new_phi, new_corr
        assert np.all((phi >= 3) & (phi <= 30))


class TestTau:
    def test_no_data_is_prior(self):
        y = ObservedData(np.zeros((2, 5)), np.array([[0] * 5, [1] * 5], dtype=bool))
        shape, scale = tau_posterior(PriorSpec(), np.zeros((2, 5)), y)
        np.testing.assert_array_equal(shape, [1.0, 3.5])

    def test_zero_residuals(self):
        y = ObservedData.complete(np.ones((1, 10)))
        shape, scale = tau_posterior(PriorSpec(), np.ones((1, 10)), y)
        assert (shape[0], scale[0]) == (6.0, 1.0)

    def test_moments(self, rng):
        y = ObservedData.complete(np.ones((1, 10)))
        draws = np.array([update_tau_conjugate(PriorSpec(), np.ones((1, 10)), y, rng)[0]
                          for _ in range(100_000)])
        mean, var = 1 / 5, 1 / (25 * 4)  # IG(6, 1)
        assert abs(draws.mean() - mean) < 5 * np.sqrt(var / draws.size)

    def test_counts_only_available(self, rng):
        v = rng.normal(size=(2, 8))
        avail = rng.random((2, 8)) > 0.5
        y1 = ObservedData(np.where(avail, v + 1.0, 0.0), avail)
        y2 = ObservedData(np.where(avail, v + 1.0, 42.0), avail)
        s1 = tau_posterior(PriorSpec(), v, y1)
        s2 = tau_posterior(PriorSpec(), v, y2)
        np.testing.assert_array_equal(s1[0], 1 + 0.5 * avail.sum(axis=1))
        np.testing.assert_array_equal(s1[1], 1 + 0.5 * avail.sum(axis=1))
        np.testing.assert_array_equal(s1[1], s2[1])


class TestMean:
    def test_univariate_precision(self, rng):
        _, state, _, corr, v = random_instance(rng, 7, 1)
        prec, _ = mu_posterior(PriorSpec(mu_var=3.0), v, state, corr)
        ref = corr.r_inv[0].sum() / state.a[0, 0] ** 2 + 1 / 3.0
        assert prec[0, 0] == pytest.approx(ref, rel=1e-12)

    def test_matches_dense(self, rng):
        _, state, _, corr, v = random_instance(rng, 6, 3)
        prior = PriorSpec(mu_var=2.0)
        prec, rhs = mu_posterior(prior, v, state, corr)
        k = np.kron(np.ones((6, 1)), np.eye(3))
        sinv = np.linalg.inv(dense_lmc_covariance(state, corr))
        np.testing.assert_allclose(prec, k.T @ sinv @ k + np.eye(3) / 2.0, rtol=1e-9)
        np.testing.assert_allclose(rhs, k.T @ sinv @ v.ravel(order="F"), rtol=1e-9, atol=1e-10)

    def test_prior_domination(self, instance, rng):
        _, state, _, corr, v = instance
        mu = update_mu_conjugate(PriorSpec(mu_var=1e-14), v + 5.0, state, corr, rng)
        np.testing.assert_allclose(mu, 0.0, atol=1e-5)


class TestRJSweep:
    def test_prior_domination_keeps_full_mask(self, rng):
        _, state, _, corr, v = random_instance(rng, 6, 3)
        g = gram_matrices(v, corr)
        s = rj_sweep(state, g, 6, PriorSpec(pi_sparsity=1.0), rng, 50)
        assert s.mask.all()

    def test_stats_and_admissible(self, rng):
        _, state, _, corr, v = random_instance(rng, 6, 3)
        g = gram_matrices(v, corr)
        stats = {}
        for _ in range(200):
            state = rj_sweep(state, g, 6, PriorSpec(), rng, 3, stats)
            assert np.linalg.matrix_rank(state.effective) == 3
        assert stats["rj_proposed"] == 600 and 0 < stats["rj_accepted"] < 600
