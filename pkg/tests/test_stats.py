import math

import numpy as np
import pytest
from scipy import stats as sst

from qcl.stats import Ecdf, chi2_test, gauss_legendre, ks_distance, ks_threshold, ks_two_sample, mean_stderr, quad2d


def test_ecdf_steps():
    e = Ecdf([3.0, 1.0, 2.0, 2.0])
    np.testing.assert_allclose(e([0.5, 1.0, 2.0, 2.5, 3.0]), [0, 0.25, 0.75, 0.75, 1.0])
    assert len(e) == 4
    with pytest.raises(ValueError):
        Ecdf([])
    with pytest.raises(ValueError):
        Ecdf([1.0, np.nan])


def test_ks_matches_scipy_for_continuous_law():
    x = np.random.default_rng(1).standard_normal(3000)
    assert ks_distance(x, sst.norm.cdf) == pytest.approx(sst.kstest(x, "norm").statistic, abs=1e-12)


def test_ks_handles_atoms_exactly():
    # sample equal to its own law: distance zero even though the reference has jumps
    x = np.repeat([0.0, 1.0, 2.0], [1, 2, 1])

    def cdf(v):
        v = np.asarray(v)
        return np.select([v < 0, v < 1, v < 2], [0.0, 0.25, 0.75], 1.0)

    assert ks_distance(x, cdf) == pytest.approx(0.0, abs=1e-15)


def test_ks_two_sample_and_threshold():
    g = np.random.default_rng(2)
    a, b = g.standard_normal(2000), g.standard_normal(2000)
    assert ks_two_sample(a, b) == pytest.approx(sst.ks_2samp(a, b).statistic, abs=1e-12)
    assert ks_two_sample(a, b + 1) > ks_threshold(2000, 2000)
    assert ks_threshold(10000) == pytest.approx(0.0136)


def test_mean_stderr_real_and_complex():
    v = np.arange(10.0)
    m, se = mean_stderr(v)
    assert m == 4.5 and se == pytest.approx(v.std(ddof=1) / math.sqrt(10))
    m, se = mean_stderr(np.array([1 + 1j, 1 - 1j]))
    assert m == 1 and se == pytest.approx(1.0)
    assert mean_stderr([2.0]) == (2.0, float("inf"))
    with pytest.raises(ValueError):
        mean_stderr([])


def test_chi2_recovers_good_fit_and_rejects_bad():
    g = np.random.default_rng(3)
    p = np.array([0.1, 0.2, 0.3, 0.4])
    obs = np.bincount(g.choice(4, size=5000, p=p), minlength=4)
    assert chi2_test(obs, p).pvalue > 0.001
    assert chi2_test(obs, [0.25] * 4).pvalue < 1e-6
    res = chi2_test([10, 20, 30], [0.2, 0.3, 0.5])
    ref = sst.chisquare([10, 20, 30], [12, 18, 30])
    assert res.statistic == pytest.approx(ref.statistic) and res.pvalue == pytest.approx(ref.pvalue)


def test_chi2_pools_small_cells_and_flags_impossible_counts():
    # the two tiny cells pool, and the pooled cell is still short so it joins the smallest big one
    res = chi2_test([50, 48, 1, 1], [0.5, 0.49, 0.005, 0.005])
    assert res.dof == 1
    assert res.statistic == pytest.approx((48 + 2 - 50) ** 2 / 50 + 0.0, abs=1e-12)
    assert chi2_test([40, 40, 10, 10], [0.4, 0.4, 0.1, 0.1]).dof == 3
    assert chi2_test([5, 5, 1], [0.5, 0.5, 0.0]).pvalue == 0.0
    with pytest.raises(ValueError):
        chi2_test([1, 2], [0.5, 0.2, 0.3])


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre(-1.0, 2.0, 5, panels=3)
    assert np.sum(w * x ** 9) == pytest.approx((2 ** 10 - 1) / 10)


def test_quad2d_smooth_and_kinked():
    assert quad2d(lambda x, y: x * x * y, 0, 1, 0, 2) == pytest.approx(2 / 3)
    # crystal-limit oracle: (1/4) int int max(1 + m2, 1 - m1) over [-1, 1]^2 = 4/3
    val = quad2d(lambda a, b: np.maximum(1 + b, 1 - a), -1, 1, -1, 1, diagonal=0.0) / 4
    assert val == pytest.approx(4 / 3, abs=1e-12)
    # without the split the kink costs accuracy
    assert abs(quad2d(lambda a, b: np.maximum(1 + b, 1 - a), -1, 1, -1, 1) / 4 - 4 / 3) > 1e-8
    with pytest.raises(ValueError):
        quad2d(lambda a, b: a, 1, 0, 0, 1)
