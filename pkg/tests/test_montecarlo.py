import json

import numpy as np
import pytest
from scipy import stats

from flagstat.exceptions import DomainError
from flagstat.flag import FlagType
from flagstat.inference import CovModel
from flagstat.matcore import chi2_quantile
from flagstat.montecarlo import (
    McConfig,
    clt_block_check,
    coverage_rate,
    haar_check,
    histogram_csv,
    ks_distance,
    ks_two_sample,
    replicate_pivotal,
    replicate_rng,
    sample_gaussian,
    seeded_model,
)


@pytest.fixture
def small_model():
    return seeded_model("1,1,1", (4.0, 2.0, 1.0), 11)


class TestSampling:
    def test_law_of_large_numbers(self):
        m = seeded_model("1,2", (3.0, 1.0), 5)
        X = sample_gaussian(m, 1_000_000, replicate_rng(1, 0))
        S = X.T @ X / X.shape[0]
        assert np.linalg.norm(S - m.sigma) / np.linalg.norm(m.sigma) < 0.01

    def test_scalar_variance(self):
        m = CovModel(np.eye(1), (1.0,), FlagType((1,)))
        X = sample_gaussian(m, 200_000, replicate_rng(3, 0))
        assert abs(X.var() - 1.0) < 0.01

    def test_bit_identical(self, small_model):
        a = sample_gaussian(small_model, 50, replicate_rng(7, 3))
        b = sample_gaussian(small_model, 50, replicate_rng(7, 3))
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self, small_model):
        a = sample_gaussian(small_model, 5, replicate_rng(7, 3))
        b = sample_gaussian(small_model, 5, replicate_rng(7, 4))
        c = sample_gaussian(small_model, 5, replicate_rng(8, 3))
        assert not np.array_equal(a, b) and not np.array_equal(a, c)


class TestKs:
    def test_exact_chi2_samples(self):
        u = np.random.default_rng(0).uniform(size=2000)
        x = stats.chi2.ppf(u, 6)
        assert ks_distance(x, 6) < 0.04

    def test_against_scipy(self):
        x = np.random.default_rng(1).chisquare(4, size=500)
        assert ks_distance(x, 4) == pytest.approx(stats.kstest(x, "chi2", args=(4,)).statistic,
                                                  abs=1e-12)

    def test_constant_samples(self):
        assert ks_distance(np.full(100, 5.3), 6) >= 0.5

    def test_order_free(self):
        x = np.random.default_rng(2).chisquare(3, size=300)
        assert ks_distance(x, 3) == ks_distance(np.sort(x), 3)

    def test_empty(self):
        with pytest.raises(DomainError):
            ks_distance([], 3)

    def test_two_sample_against_scipy(self):
        r = np.random.default_rng(3)
        a, b = r.normal(size=300), r.normal(0.2, size=250)
        assert ks_two_sample(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)


class TestConfig:
    def test_invalid(self, small_model):
        with pytest.raises(DomainError):
            McConfig(small_model, 1, 10)
        with pytest.raises(DomainError):
            McConfig(small_model, 10, 0)
        with pytest.raises(DomainError):
            McConfig(small_model, 10, 10, alpha=1.0)


class TestReplicatePivotal:
    def test_moments_small(self, small_model):
        res = replicate_pivotal(McConfig(small_model, 2000, 400, seed=1))
        assert res.statistics.size == 400 and res.failures == 0
        assert res.dof == 3
        assert abs(res.mean - 3) < 0.5
        assert res.ks_distance < 0.08
        assert res.counts.sum() <= 400 and res.bin_edges.size == 51
        assert res.bin_edges[-1] == pytest.approx(chi2_quantile(3, 0.999))

    def test_thread_independence(self, small_model, monkeypatch):
        cfg = McConfig(small_model, 200, 40, seed=9)
        monkeypatch.setenv("FLAGSTAT_THREADS", "1")
        a = replicate_pivotal(cfg)
        monkeypatch.setenv("FLAGSTAT_THREADS", "4")
        b = replicate_pivotal(cfg)
        np.testing.assert_array_equal(a.statistics, b.statistics)
        assert a.to_json() == b.to_json()

    def test_bad_thread_env(self, small_model, monkeypatch):
        monkeypatch.setenv("FLAGSTAT_THREADS", "many")
        with pytest.raises(DomainError):
            replicate_pivotal(McConfig(small_model, 20, 2))

    def test_single_replicate(self, small_model):
        res = replicate_pivotal(McConfig(small_model, 100, 1))
        assert res.statistics.size == 1
        assert res.to_dict()["ks_distance"] is None

    def test_failures_are_counted(self):
        # tiny samples in d = 3 with n = 2 give a rank-one covariance: repeated zero eigenvalues
        m = seeded_model("1,1,1", (3.0, 2.0, 1.0), 0)
        res = replicate_pivotal(McConfig(m, 2, 10))
        assert res.failures == 10 and res.statistics.size == 0

    def test_json_and_csv(self, small_model):
        res = replicate_pivotal(McConfig(small_model, 300, 30, seed=4, bins=10))
        doc = json.loads(res.to_json())
        assert doc["config"]["seed"] == 4 and doc["config"]["lambdas"] == [4.0, 2.0, 1.0]
        assert len(doc["statistics"]) == 30
        rows = histogram_csv(res).strip().splitlines()
        assert rows[0] == "bin_left,bin_right,count,chi2_density_at_midpoint"
        assert len(rows) == 11
        lo, hi, count, dens = rows[1].split(",")
        assert float(dens) == pytest.approx(stats.chi2.pdf((float(lo) + float(hi)) / 2, 3))


class TestCoverageAndChecks:
    def test_coverage_half(self, small_model):
        cov = coverage_rate(McConfig(small_model, 2000, 600, alpha=0.5, seed=2))
        assert abs(cov - 0.5) < 0.07

    def test_coverage_tiny_alpha(self, small_model):
        assert coverage_rate(McConfig(small_model, 2000, 100, alpha=1e-9, seed=2)) == 1.0

    def test_clt_block(self, small_model):
        out = clt_block_check(McConfig(small_model, 5000, 600, seed=3), 0, 1)
        assert out["sigma2"] == pytest.approx(2.0) and out["s2"] == pytest.approx(8.0)
        assert abs(out["var_F"] / out["sigma2"] - 1) < 0.2
        assert abs(out["var_U"] / out["s2"] - 1) < 0.2
        assert abs(out["var_G"] / out["sigma2"] - 1) < 0.2

    def test_clt_same_block(self, small_model):
        with pytest.raises(DomainError):
            clt_block_check(McConfig(small_model, 50, 5), 1, 1)

    def test_haar_line_block(self, small_model):
        h = haar_check(McConfig(small_model, 5000, 200, seed=5), 0)
        assert h.plus_frequency >= 0.99

    def test_haar_plane_block(self):
        m = seeded_model("2,1", (3.0, 1.0), 1)
        h = haar_check(McConfig(m, 3000, 400, seed=6), 0)
        assert h.entry_ks.shape == (2, 2)
        assert h.entry_ks.max() < 0.15 and h.reference_ks < 0.15
        assert h.orthogonality_error < 1e-10
