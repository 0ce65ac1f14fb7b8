import math

import numpy as np
import pytest
from scipy import stats

from fixedseq.special import rank_sum_p, signed_rank_p, t_cdf, t_sf, t_two_sided_p

from oracles import rank_sum_p_enumerated, signed_rank_p_enumerated, t1_cdf, t2_cdf

POINTS = np.concatenate([np.linspace(-30, 30, 41), [-1e-3, 1e-6, 0.5, 2.5, 1e3, -1e4, 7.7, -0.25, 12.0]])


def test_t_cdf_closed_forms():
    assert POINTS.size == 50
    for t in POINTS:
        assert abs(float(t_cdf(t, 1)) - t1_cdf(t)) <= 1e-12
        assert abs(float(t_cdf(t, 2)) - t2_cdf(t)) <= 1e-12


@pytest.mark.parametrize("df", [1, 2, 5, 9, 30])
def test_t_cdf_symmetry(df):
    assert float(t_cdf(0.0, df)) == 0.5
    np.testing.assert_allclose(t_cdf(-POINTS, df), 1 - t_cdf(POINTS, df), atol=1e-15)
    np.testing.assert_allclose(t_sf(POINTS, df), stats.t.sf(POINTS, df), rtol=1e-10, atol=1e-300)
    np.testing.assert_allclose(t_two_sided_p(POINTS, df), 2 * stats.t.sf(np.abs(POINTS), df), rtol=1e-10)


def test_signed_rank_small_cases():
    assert signed_rank_p([1, -1]) == 1.0
    assert signed_rank_p([1, 2, 3]) == pytest.approx(0.25, abs=1e-15)


def test_rank_sum_small_cases():
    assert rank_sum_p([1, 2], [3, 4]) == pytest.approx(1 / 3, abs=1e-15)
    assert rank_sum_p([5, 5], [5, 5]) == 1.0


def test_signed_rank_matches_enumeration_all_sizes():
    rng = np.random.default_rng(11)
    for n in range(1, 9):
        for _ in range(40):
            x = rng.integers(-4, 5, size=n).astype(float)  # integer data forces ties and zeros
            if not np.any(x != 0):
                continue
            assert signed_rank_p(x) == pytest.approx(signed_rank_p_enumerated(x), abs=1e-12)
            y = rng.normal(size=n)
            assert signed_rank_p(y) == pytest.approx(signed_rank_p_enumerated(y), abs=1e-12)


def test_rank_sum_matches_enumeration_all_sizes():
    rng = np.random.default_rng(12)
    for n in range(2, 9):
        for n1 in range(1, n):
            for _ in range(10):
                x = rng.integers(0, 4, size=n).astype(float)
                assert rank_sum_p(x[:n1], x[n1:]) == pytest.approx(rank_sum_p_enumerated(x[:n1], x[n1:]), abs=1e-12)
                y = rng.normal(size=n)
                assert rank_sum_p(y[:n1], y[n1:]) == pytest.approx(rank_sum_p_enumerated(y[:n1], y[n1:]), abs=1e-12)


def test_normal_approximations_close_to_exact():
    rng = np.random.default_rng(13)
    x = rng.normal(0.3, 1, size=24)
    assert signed_rank_p(x, exact=False) == pytest.approx(signed_rank_p(x, exact=True), abs=0.01)
    a, b = rng.normal(size=10), rng.normal(0.5, 1, size=10)
    assert rank_sum_p(a, b, exact=False) == pytest.approx(rank_sum_p(a, b, exact=True), abs=0.01)


def test_large_samples_agree_with_scipy():
    rng = np.random.default_rng(14)
    x = rng.normal(0.2, 1, size=60)
    ref = stats.wilcoxon(x, correction=True, method="approx").pvalue
    assert signed_rank_p(x) == pytest.approx(ref, rel=1e-10)
    a, b = rng.normal(size=15), rng.normal(0.4, 1, size=15)
    ref = stats.mannwhitneyu(a, b, use_continuity=True, method="asymptotic").pvalue
    assert rank_sum_p(a, b) == pytest.approx(ref, rel=1e-10)
